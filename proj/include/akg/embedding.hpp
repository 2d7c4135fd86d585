#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "akg/similarity.hpp"

namespace akg {

/// Maps text to a fixed-dimension dense vector. Implementations must be
/// safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual DenseVector<double> embed(std::string_view text) const = 0;
  virtual Eigen::Index dimension() const = 0;
  virtual std::string name() const = 0;
};

// Deterministic offline provider. Each lowercase alphanumeric token is
// hashed into a seed for a pseudo-random vector with entries in [-1, 1);
// a text embeds as the sum of its token vectors. Shared tokens therefore
// produce positive cosine, unrelated texts scatter around zero, and the
// output is bit-identical on every platform.
class HashEmbedding final : public EmbeddingProvider {
 public:
  explicit HashEmbedding(Eigen::Index dimension = 64, std::uint64_t seed = 0x5eedULL);

  DenseVector<double> embed(std::string_view text) const override;
  Eigen::Index dimension() const override { return dimension_; }
  std::string name() const override { return "hash"; }

  DenseVector<double> token_vector(std::string_view token) const;

 private:
  Eigen::Index dimension_;
  std::uint64_t seed_;
};

// OpenAI-compatible embeddings endpoint: POST {"model", "input"} and read
// data[0].embedding. Results are memoized per text.
class HttpEmbedding final : public EmbeddingProvider {
 public:
  HttpEmbedding(std::string endpoint_url, std::string model, std::string api_key);

  DenseVector<double> embed(std::string_view text) const override;
  Eigen::Index dimension() const override;
  std::string name() const override { return "http:" + model_; }

 private:
  std::string endpoint_url_;
  std::string model_;
  std::string api_key_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, DenseVector<double>> cache_;
  mutable Eigen::Index dimension_ = 0;
};

/// Tokens used by the hash provider: maximal runs of ASCII alphanumerics,
/// lowercased.
std::vector<std::string> embedding_tokens(std::string_view text);

/// Builds a provider from a config name: "hash" or "http".
std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const std::string& kind,
                                                                 const std::string& endpoint = {},
                                                                 const std::string& model = {});

}  // namespace akg
