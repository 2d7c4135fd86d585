#include "akg/embedding.hpp"

#include <httplib.h>

#include <cctype>
#include <cstdlib>
#include <json.hpp>
#include <random>

#include "akg/core.hpp"

namespace akg {

std::vector<std::string> embedding_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

HashEmbedding::HashEmbedding(Eigen::Index dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
  if (dimension <= 0) throw UserError("embedding dimension must be positive");
}

DenseVector<double> HashEmbedding::token_vector(std::string_view token) const {
  // mt19937_64's output sequence is fixed by the standard; the mapping to
  // [-1, 1) is done by hand because std distributions are not portable.
  std::mt19937_64 rng(fnv1a64(token, seed_ ^ 0xcbf29ce484222325ULL));
  DenseVector<double> v(dimension_);
  for (Eigen::Index i = 0; i < dimension_; ++i) v[i] = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
  return v;
}

DenseVector<double> HashEmbedding::embed(std::string_view text) const {
  DenseVector<double> sum = DenseVector<double>::Zero(dimension_);
  for (const auto& token : embedding_tokens(text)) sum += token_vector(token);
  return sum;
}

HttpEmbedding::HttpEmbedding(std::string endpoint_url, std::string model, std::string api_key)
    : endpoint_url_(std::move(endpoint_url)), model_(std::move(model)), api_key_(std::move(api_key)) {}

DenseVector<double> HttpEmbedding::embed(std::string_view text) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(std::string(text)); it != cache_.end()) return it->second;
  }
  auto [base, path] = split_url(endpoint_url_);
  httplib::Client client(base);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  nlohmann::json body{{"model", model_}, {"input", std::string(text)}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw RetriableError("embedding endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw RetriableError("embedding endpoint returned HTTP " + std::to_string(res->status));
  DenseVector<double> v;
  try {
    auto j = nlohmann::json::parse(res->body);
    auto values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    v = Eigen::Map<const DenseVector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embedding response: ") + e.what());
  }
  std::lock_guard lock(mu_);
  if (dimension_ == 0) dimension_ = v.size();
  if (v.size() != dimension_) throw ParseError("embedding dimension changed between calls");
  cache_.emplace(std::string(text), v);
  return v;
}

Eigen::Index HttpEmbedding::dimension() const {
  std::lock_guard lock(mu_);
  return dimension_;
}

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const std::string& kind,
                                                                 const std::string& endpoint,
                                                                 const std::string& model) {
  if (kind == "hash") return std::make_shared<HashEmbedding>();
  if (kind == "http") {
    if (endpoint.empty()) throw UserError("http embedder requires an endpoint");
    const char* key = std::getenv("KG_LLM_API_KEY");
    return std::make_shared<HttpEmbedding>(endpoint, model, key ? key : "");
  }
  throw UserError("unknown embedder '" + kind + "'");
}

}  // namespace akg
