#include "akg/simgraph.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "akg/core.hpp"
#include "akg/keyphrase.hpp"

namespace akg::simgraph {

using nlohmann::ordered_json;

std::string_view to_string(EdgeKind k) { return k == EdgeKind::primary ? "primary" : "secondary"; }

double cosine_similarity(const vectors::AuthorVector& u, const vectors::AuthorVector& v) {
  if (u.components.size() != v.components.size())
    throw UserError("vocabulary mismatch between " + u.author_id + " and " + v.author_id);
  return std::clamp(cosine(u.components, v.components), 0.0, 1.0);
}

namespace {

bool by_score_then_id(const std::pair<std::string, double>& a, const std::pair<std::string, double>& b) {
  return a.second != b.second ? a.second > b.second : a.first < b.first;
}

SimilarityEdge make_edge(const std::string& x, const std::string& y, double score, EdgeKind kind) {
  return x < y ? SimilarityEdge{x, y, score, kind} : SimilarityEdge{y, x, score, kind};
}

}  // namespace

SimilarityIndex::SimilarityIndex(vectors::DescriptorVocabulary vocab,
                                 std::map<std::string, vectors::AuthorVector> vectors,
                                 aggregate::AggregateMap aggregates,
                                 std::map<std::string, aggregate::AuthorInfo> infos)
    : vocab_(std::move(vocab)),
      vectors_(std::move(vectors)),
      aggregates_(std::move(aggregates)),
      infos_(std::move(infos)) {
  for (const auto& [id, v] : vectors_) {
    if (v.components.size() != vocab_.size())
      throw UserError("vector of " + id + " does not match the vocabulary dimension");
    auto agg = aggregates_.find(id);
    if (agg == aggregates_.end()) throw ConsistencyError("vector without aggregate: " + id);
    auto& co = co_authors_[id];
    for (const auto& [other, n] : aggregate::merged_co_authors(agg->second))
      if (other != id && vectors_.contains(other)) co.emplace(other, n);
  }
}

std::vector<std::string> SimilarityIndex::author_ids() const {
  std::vector<std::string> out;
  out.reserve(vectors_.size());
  for (const auto& [id, _] : vectors_) out.push_back(id);
  return out;
}

const vectors::AuthorVector& SimilarityIndex::vector(std::string_view author) const {
  auto it = vectors_.find(std::string(author));
  if (it == vectors_.end()) throw NotFound("unknown author '" + std::string(author) + "'");
  return it->second;
}

const aggregate::AuthorAggregate& SimilarityIndex::aggregate(std::string_view author) const {
  auto it = aggregates_.find(std::string(author));
  if (it == aggregates_.end()) throw NotFound("unknown author '" + std::string(author) + "'");
  return it->second;
}

std::string SimilarityIndex::display_name(std::string_view author) const {
  auto it = infos_.find(std::string(author));
  return it == infos_.end() ? std::string(author) : it->second.display_name;
}

std::int64_t SimilarityIndex::nb_publications(std::string_view author) const {
  return aggregate(author).nb_publications();
}

const std::map<std::string, std::int64_t>& SimilarityIndex::co_authors(std::string_view author) const {
  auto it = co_authors_.find(std::string(author));
  if (it == co_authors_.end()) throw NotFound("unknown author '" + std::string(author) + "'");
  return it->second;
}

Ranked SimilarityIndex::top_k_similar(std::string_view center, std::size_t k) const {
  const auto& c = vector(center);
  Ranked out;
  for (const auto& [id, v] : vectors_)
    if (id != center) out.emplace_back(id, cosine_similarity(c, v));
  std::sort(out.begin(), out.end(), by_score_then_id);
  if (out.size() > k) out.resize(k);
  return out;
}

SharedDescriptors SimilarityIndex::shared_descriptors(std::string_view a, std::string_view b) const {
  const auto& va = vector(a).components;
  const auto& vb = vector(b).components;
  SharedDescriptors out{std::string(a), std::string(b), {}};
  SparseVector<double>::InnerIterator ia(va), ib(vb);
  while (ia && ib) {
    if (ia.index() < ib.index()) {
      ++ia;
    } else if (ib.index() < ia.index()) {
      ++ib;
    } else {
      if (ia.value() > 0.0 && ib.value() > 0.0)
        out.descriptors.push_back({vocab_.at(ia.index()).name, ia.value(), ib.value(), ia.value() * ib.value()});
      ++ia;
      ++ib;
    }
  }
  std::sort(out.descriptors.begin(), out.descriptors.end(), [](const SharedDescriptor& x, const SharedDescriptor& y) {
    return x.rank_score != y.rank_score ? x.rank_score > y.rank_score : x.name < y.name;
  });
  return out;
}

Ranked SimilarityIndex::primary_connections(std::string_view author, double threshold, std::size_t limit) const {
  const auto& c = vector(author);
  const auto& co = co_authors(author);
  Ranked out;
  for (const auto& [id, v] : vectors_) {
    if (id == author) continue;
    const double s = cosine_similarity(c, v);
    if (s > threshold || co.contains(id)) out.emplace_back(id, s);
  }
  std::sort(out.begin(), out.end(), by_score_then_id);
  if (out.size() > limit) out.resize(limit);
  return out;
}

EgoGraph SimilarityIndex::ego_graph(std::string_view center, double threshold, std::size_t max_neighbors) const {
  EgoGraph g;
  g.center = std::string(center);
  auto node = [&](const std::string& id) { return EgoNode{id, display_name(id), nb_publications(id)}; };
  g.nodes.push_back(node(g.center));

  const auto primary = primary_connections(center, threshold, max_neighbors);
  std::set<std::string> inner{g.center};
  for (const auto& [id, score] : primary) {
    inner.insert(id);
    g.nodes.push_back(node(id));
    g.edges.push_back(make_edge(g.center, id, score, EdgeKind::primary));
  }
  std::set<std::string> outer;
  for (const auto& [id, _] : primary) {
    for (const auto& [other, score] : primary_connections(id, threshold, max_neighbors)) {
      if (inner.contains(other)) continue;
      outer.insert(other);
      g.edges.push_back(make_edge(id, other, score, EdgeKind::secondary));
    }
  }
  for (const auto& id : outer) g.nodes.push_back(node(id));
  return g;
}

std::vector<std::pair<std::string, std::int64_t>> SimilarityIndex::authors_by_descriptor(
    std::string_view descriptor) const {
  auto idx = vocab_.find(keyphrase::normalize_descriptor(descriptor));
  if (!idx) throw NotFound("descriptor '" + std::string(descriptor) + "' is not in the vocabulary");
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const auto& [id, v] : vectors_)
    if (v.components.coeff(*idx) > 0.0) out.emplace_back(id, nb_publications(id));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  return out;
}

std::vector<SimilarityEdge> SimilarityIndex::similarity_edges(double threshold) const {
  const auto ids = author_ids();
  const auto n = static_cast<Eigen::Index>(ids.size());
  std::vector<SimilarityEdge> edges;
  if (threshold < 0.0) {
    // Every pair qualifies, overlapping support or not.
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        edges.push_back(make_edge(ids[i], ids[j], cosine_similarity(vectors_.at(ids[i]), vectors_.at(ids[j])),
                                  EdgeKind::primary));
    return edges;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i)
    for (SparseVector<double>::InnerIterator it(vectors_.at(ids[i]).components); it; ++it)
      triplets.emplace_back(i, it.index(), it.value());
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(n, vocab_.size());
  m.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> gram = m * m.transpose();
  for (Eigen::Index i = 0; i < gram.outerSize(); ++i) {
    for (decltype(gram)::InnerIterator it(gram, i); it; ++it) {
      if (it.col() <= i || it.value() == 0.0) continue;
      const double s = cosine_similarity(vectors_.at(ids[i]), vectors_.at(ids[it.col()]));
      if (s > threshold) edges.push_back(make_edge(ids[i], ids[it.col()], s, EdgeKind::primary));
    }
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.author_a, a.author_b) < std::tie(b.author_a, b.author_b);
  });
  return edges;
}

std::map<std::string, int> label_propagation(const std::vector<std::string>& nodes,
                                             const std::vector<std::pair<std::string, std::string>>& edges,
                                             int max_iterations) {
  std::vector<std::string> sorted = nodes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < sorted.size(); ++i) pos.emplace(sorted[i], i);
  std::vector<std::vector<std::size_t>> adj(sorted.size());
  for (const auto& [a, b] : edges) {
    auto ia = pos.find(a), ib = pos.find(b);
    if (ia == pos.end() || ib == pos.end() || ia->second == ib->second) continue;
    adj[ia->second].push_back(ib->second);
    adj[ib->second].push_back(ia->second);
  }

  // Labels are indices into `sorted`, so the smallest label is the
  // lexicographically smallest author id.
  std::vector<std::size_t> labels(sorted.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i;
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<std::size_t> next(labels.size());
    for (std::size_t v = 0; v < labels.size(); ++v) {
      std::map<std::size_t, int> votes;
      ++votes[labels[v]];
      for (auto u : adj[v]) ++votes[labels[u]];
      auto best = votes.begin();
      for (auto it = votes.begin(); it != votes.end(); ++it)
        if (it->second > best->second) best = it;
      next[v] = best->first;
    }
    if (next == labels) break;
    labels = std::move(next);
  }

  std::map<std::size_t, std::size_t> smallest_member;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    auto [it, inserted] = smallest_member.emplace(labels[v], v);
    if (!inserted) it->second = std::min(it->second, v);
  }
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (smallest member, label)
  for (const auto& [label, member] : smallest_member) order.emplace_back(member, label);
  std::sort(order.begin(), order.end());
  std::map<std::size_t, int> community_of_label;
  for (std::size_t c = 0; c < order.size(); ++c) community_of_label[order[c].second] = static_cast<int>(c);

  std::map<std::string, int> out;
  for (std::size_t v = 0; v < sorted.size(); ++v) out.emplace(sorted[v], community_of_label[labels[v]]);
  return out;
}

std::map<std::string, int> SimilarityIndex::detect_communities(double threshold, int max_iterations) const {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& e : similarity_edges(threshold)) pairs.emplace_back(e.author_a, e.author_b);
  return label_propagation(author_ids(), pairs, max_iterations);
}

Ranked SimilarityIndex::wordcloud_frequencies(std::string_view author, std::size_t top_n) const {
  Ranked out;
  for (SparseVector<double>::InnerIterator it(vector(author).components); it; ++it)
    if (it.value() > 0.0) out.emplace_back(vocab_.at(it.index()).name, it.value());
  std::sort(out.begin(), out.end(), by_score_then_id);
  if (out.size() > top_n) out.resize(top_n);
  if (!out.empty()) {
    const double max = out.front().second;
    for (auto& [_, w] : out) w /= max;
  }
  return out;
}

std::vector<EgoNode> SimilarityIndex::search_authors(std::string_view query, std::size_t limit) const {
  const auto q = to_lower_ascii(trim(query));
  std::vector<EgoNode> out;
  for (const auto& [id, _] : vectors_) {
    auto name = display_name(id);
    if (to_lower_ascii(name).find(q) != std::string::npos) out.push_back({id, name, nb_publications(id)});
  }
  std::sort(out.begin(), out.end(), [](const EgoNode& a, const EgoNode& b) {
    return a.nb_publications != b.nb_publications ? a.nb_publications > b.nb_publications : a.author_id < b.author_id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

std::vector<std::pair<std::string, std::int64_t>> SimilarityIndex::search_descriptors(std::string_view query,
                                                                                     std::size_t limit) const {
  const auto q = to_lower_ascii(trim(query));
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const auto& e : vocab_.entries())  // already frequency-ranked
    if (e.name.find(q) != std::string::npos) out.emplace_back(e.name, e.corpus_frequency);
  if (out.size() > limit) out.resize(limit);
  return out;
}

ordered_json to_json(const EgoGraph& g) {
  ordered_json j;
  j["center"] = g.center;
  auto& nodes = j["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes)
    nodes.push_back(ordered_json{{"author_id", n.author_id}, {"display_name", n.display_name},
                                 {"nb_publications", n.nb_publications}});
  auto& edges = j["edges"] = ordered_json::array();
  for (const auto& e : g.edges)
    edges.push_back(ordered_json{
        {"author_a", e.author_a}, {"author_b", e.author_b}, {"score", e.score}, {"kind", to_string(e.kind)}});
  return j;
}

ordered_json to_json(const SharedDescriptors& s) {
  ordered_json j;
  j["author_a"] = s.author_a;
  j["author_b"] = s.author_b;
  auto& list = j["descriptors"] = ordered_json::array();
  for (const auto& d : s.descriptors)
    list.push_back(ordered_json{
        {"name", d.name}, {"weight_a", d.weight_a}, {"weight_b", d.weight_b}, {"rank_score", d.rank_score}});
  return j;
}

ordered_json ranked_json(const Ranked& r, const char* key_name, const char* value_name) {
  auto arr = ordered_json::array();
  for (const auto& [k, v] : r) arr.push_back(ordered_json{{key_name, k}, {value_name, v}});
  return arr;
}

}  // namespace akg::simgraph
