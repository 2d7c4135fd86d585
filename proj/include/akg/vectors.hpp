#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "akg/aggregate.hpp"
#include "akg/similarity.hpp"

namespace akg::vectors {

enum class Origin { concept_tag, keyphrase, both };
std::string_view to_string(Origin o);
Origin origin_from_string(std::string_view s);

struct VocabEntry {
  std::string name;
  Origin origin = Origin::concept_tag;
  std::int64_t corpus_frequency = 0;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

// Ordered by corpus frequency descending, ties by name ascending.
class DescriptorVocabulary {
 public:
  DescriptorVocabulary() = default;
  explicit DescriptorVocabulary(std::vector<VocabEntry> entries);

  const std::vector<VocabEntry>& entries() const { return entries_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(entries_.size()); }
  std::optional<Eigen::Index> find(std::string_view name) const;
  const VocabEntry& at(Eigen::Index i) const { return entries_.at(static_cast<std::size_t>(i)); }

  friend bool operator==(const DescriptorVocabulary& a, const DescriptorVocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

struct WeightConfig {
  std::array<double, 3> period_factors{0.25, 0.5, 1.0};  // 1990-2000, 2001-2010, 2011-2023
  double w_first = 2.0;
  double w_nonfirst = 1.0;
  double w_c = 1.0;
  double w_pa = 1.0;
  double w_pt = 2.0;

  void validate() const;
  friend bool operator==(const WeightConfig&, const WeightConfig&) = default;
};

nlohmann::ordered_json to_json(const WeightConfig& w);
WeightConfig weights_from_json(const nlohmann::json& j);

template <typename Scalar>
struct AuthorVectorT {
  std::string author_id;
  SparseVector<Scalar> components;
};
using AuthorVector = AuthorVectorT<double>;

/// Pools concept and keyphrase frequencies over every author, period and
/// role, merges entries by normalized name, keeps the top `vocab_size`.
DescriptorVocabulary build_vocabulary(const aggregate::AggregateMap& aggregates, std::size_t vocab_size = 1000);

/// w_c * C + w_pa * K_PA + w_pt * K_PT over one role bucket, where
/// C[i] = freq * avg score for concepts and the K terms are plain title /
/// abstract keyphrase frequencies. Out-of-vocabulary names are ignored.
template <typename Scalar = double>
SparseVector<Scalar> role_descriptor_vector(const aggregate::RoleBucket& bucket, const DescriptorVocabulary& vocab,
                                            const WeightConfig& weights) {
  SparseVector<Scalar> concepts(vocab.size()), abstract_kp(vocab.size()), title_kp(vocab.size());
  for (const auto& [name, stat] : bucket.concepts)
    if (auto i = vocab.find(name))
      concepts.coeffRef(*i) += Scalar(stat.freq) * Scalar(stat.avg_confidence_score());
  for (const auto& [name, stat] : bucket.keyphrases) {
    if (auto i = vocab.find(name)) {
      if (stat.freq_abstract) abstract_kp.coeffRef(*i) += Scalar(stat.freq_abstract);
      if (stat.freq_title) title_kp.coeffRef(*i) += Scalar(stat.freq_title);
    }
  }
  SparseVector<Scalar> d = Scalar(weights.w_c) * concepts + Scalar(weights.w_pa) * abstract_kp;
  d += Scalar(weights.w_pt) * title_kp;
  return d;
}

/// sum_j f_j * (w_first * D_j + w_nonfirst * D'_j). Explicit zeros are pruned.
template <typename Scalar = double>
AuthorVectorT<Scalar> author_vector(const aggregate::AuthorAggregate& agg, const DescriptorVocabulary& vocab,
                                    const WeightConfig& weights) {
  AuthorVectorT<Scalar> v{agg.author_id, SparseVector<Scalar>(vocab.size())};
  for (const auto& [period, bucket] : agg.periods) {
    const Scalar f(weights.period_factors[static_cast<std::size_t>(period)]);
    SparseVector<Scalar> first = role_descriptor_vector<Scalar>(bucket.first_author, vocab, weights);
    SparseVector<Scalar> non_first = role_descriptor_vector<Scalar>(bucket.non_first_author, vocab, weights);
    SparseVector<Scalar> period_vec = Scalar(weights.w_first) * first + Scalar(weights.w_nonfirst) * non_first;
    v.components += f * period_vec;
  }
  v.components.prune(Scalar(0), 0);
  return v;
}

std::map<std::string, AuthorVector> build_vectors(const aggregate::AggregateMap& aggregates,
                                                  const DescriptorVocabulary& vocab, const WeightConfig& weights);

nlohmann::ordered_json to_json(const DescriptorVocabulary& vocab, const WeightConfig& weights);
DescriptorVocabulary vocabulary_from_json(const nlohmann::json& j);
DescriptorVocabulary read_vocabulary(const std::filesystem::path& path, WeightConfig* weights = nullptr);

/// First line is {"_meta": {"dimension", "weights"}}, then one
/// {"author_id", "components": [[index, value], ...]} per author.
std::string write_vectors_jsonl(const std::map<std::string, AuthorVector>& vectors, const WeightConfig& weights,
                                Eigen::Index dimension);
std::map<std::string, AuthorVector> read_vectors_jsonl(const std::filesystem::path& path,
                                                       WeightConfig* weights = nullptr);

}  // namespace akg::vectors
