#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "akg/aggregate.hpp"
#include "akg/vectors.hpp"

namespace akg::simgraph {

enum class EdgeKind { primary, secondary };
std::string_view to_string(EdgeKind k);

struct SimilarityEdge {
  std::string author_a;  // author_a < author_b
  std::string author_b;
  double score = 0.0;
  EdgeKind kind = EdgeKind::primary;

  friend bool operator==(const SimilarityEdge&, const SimilarityEdge&) = default;
};

struct EgoNode {
  std::string author_id;
  std::string display_name;
  std::int64_t nb_publications = 0;

  friend bool operator==(const EgoNode&, const EgoNode&) = default;
};

struct EgoGraph {
  std::string center;
  std::vector<EgoNode> nodes;  // center first
  std::vector<SimilarityEdge> edges;

  friend bool operator==(const EgoGraph&, const EgoGraph&) = default;
};

struct SharedDescriptor {
  std::string name;
  double weight_a = 0.0;
  double weight_b = 0.0;
  double rank_score = 0.0;
};

struct SharedDescriptors {
  std::string author_a;
  std::string author_b;
  std::vector<SharedDescriptor> descriptors;
};

using Ranked = std::vector<std::pair<std::string, double>>;

/// Cosine of two author vectors. Throws UserError when their dimensions differ.
double cosine_similarity(const vectors::AuthorVector& u, const vectors::AuthorVector& v);

// Immutable query index over vectors, aggregates and author display data.
// All queries are const and safe to run concurrently.
class SimilarityIndex {
 public:
  SimilarityIndex(vectors::DescriptorVocabulary vocab, std::map<std::string, vectors::AuthorVector> vectors,
                  aggregate::AggregateMap aggregates, std::map<std::string, aggregate::AuthorInfo> infos);

  const vectors::DescriptorVocabulary& vocabulary() const { return vocab_; }
  const std::map<std::string, vectors::AuthorVector>& vectors() const { return vectors_; }
  bool contains(std::string_view author) const { return vectors_.contains(std::string(author)); }
  std::vector<std::string> author_ids() const;

  const vectors::AuthorVector& vector(std::string_view author) const;
  const aggregate::AuthorAggregate& aggregate(std::string_view author) const;
  std::string display_name(std::string_view author) const;
  std::int64_t nb_publications(std::string_view author) const;
  /// Role-merged co-author counts restricted to indexed authors.
  const std::map<std::string, std::int64_t>& co_authors(std::string_view author) const;

  /// k most similar authors, ties by id. Throws NotFound.
  Ranked top_k_similar(std::string_view center, std::size_t k) const;
  SharedDescriptors shared_descriptors(std::string_view a, std::string_view b) const;
  /// Authors connected to `author` by cosine > threshold or co-authorship,
  /// best score first, at most `limit`.
  Ranked primary_connections(std::string_view author, double threshold, std::size_t limit) const;
  EgoGraph ego_graph(std::string_view center, double threshold, std::size_t max_neighbors) const;
  /// Authors with a positive component, by publication count then id.
  std::vector<std::pair<std::string, std::int64_t>> authors_by_descriptor(std::string_view descriptor) const;
  /// Author -> community id (0-based, numbered by smallest member id).
  std::map<std::string, int> detect_communities(double threshold, int max_iterations) const;
  /// Top-n descriptors rescaled so that the largest weight is 1.
  Ranked wordcloud_frequencies(std::string_view author, std::size_t top_n) const;

  /// Pairs (a < b) with cosine > threshold, via a sparse Gram product
  /// that prefilters pairs with overlapping support.
  std::vector<SimilarityEdge> similarity_edges(double threshold) const;

  std::vector<EgoNode> search_authors(std::string_view query, std::size_t limit = 50) const;
  std::vector<std::pair<std::string, std::int64_t>> search_descriptors(std::string_view query,
                                                                      std::size_t limit = 50) const;

 private:
  vectors::DescriptorVocabulary vocab_;
  std::map<std::string, vectors::AuthorVector> vectors_;
  aggregate::AggregateMap aggregates_;
  std::map<std::string, aggregate::AuthorInfo> infos_;
  std::map<std::string, std::map<std::string, std::int64_t>> co_authors_;
};

/// Community detection on an explicit edge list: synchronous label
/// propagation, each node voting for its own label too, ties to the
/// smallest label.
std::map<std::string, int> label_propagation(const std::vector<std::string>& nodes,
                                             const std::vector<std::pair<std::string, std::string>>& edges,
                                             int max_iterations);

nlohmann::ordered_json to_json(const EgoGraph& g);
nlohmann::ordered_json to_json(const SharedDescriptors& s);
nlohmann::ordered_json ranked_json(const Ranked& r, const char* key_name, const char* value_name);

}  // namespace akg::simgraph
