#include "akg/vectors.hpp"

#include <algorithm>
#include <sstream>

#include "akg/core.hpp"
#include "akg/keyphrase.hpp"

namespace akg::vectors {

using nlohmann::json;

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::concept_tag: return "concept";
    case Origin::keyphrase: return "keyphrase";
    case Origin::both: return "both";
  }
  return "concept";
}

Origin origin_from_string(std::string_view s) {
  if (s == "concept") return Origin::concept_tag;
  if (s == "keyphrase") return Origin::keyphrase;
  if (s == "both") return Origin::both;
  throw ParseError("unknown vocabulary origin '" + std::string(s) + "'");
}

DescriptorVocabulary::DescriptorVocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].name, static_cast<Eigen::Index>(i)).second)
      throw ConsistencyError("duplicate vocabulary entry '" + entries_[i].name + "'");
  }
}

std::optional<Eigen::Index> DescriptorVocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WeightConfig::validate() const {
  for (double x : {period_factors[0], period_factors[1], period_factors[2], w_first, w_nonfirst, w_c, w_pa, w_pt})
    if (!(x >= 0.0)) throw UserError("vector weights must be non-negative");
}

nlohmann::ordered_json to_json(const WeightConfig& w) {
  nlohmann::ordered_json j;
  j["f_p0"] = w.period_factors[0];
  j["f_p1"] = w.period_factors[1];
  j["f_p2"] = w.period_factors[2];
  j["w_first"] = w.w_first;
  j["w_nonfirst"] = w.w_nonfirst;
  j["w_c"] = w.w_c;
  j["w_pa"] = w.w_pa;
  j["w_pt"] = w.w_pt;
  return j;
}

WeightConfig weights_from_json(const json& j) {
  WeightConfig w;
  w.period_factors = {j.value("f_p0", w.period_factors[0]), j.value("f_p1", w.period_factors[1]),
                      j.value("f_p2", w.period_factors[2])};
  w.w_first = j.value("w_first", w.w_first);
  w.w_nonfirst = j.value("w_nonfirst", w.w_nonfirst);
  w.w_c = j.value("w_c", w.w_c);
  w.w_pa = j.value("w_pa", w.w_pa);
  w.w_pt = j.value("w_pt", w.w_pt);
  w.validate();
  return w;
}

DescriptorVocabulary build_vocabulary(const aggregate::AggregateMap& aggregates, std::size_t vocab_size) {
  struct Pool {
    std::int64_t concept_freq = 0;
    std::int64_t keyphrase_freq = 0;
  };
  std::map<std::string, Pool> pool;
  auto add_role = [&](const aggregate::RoleBucket& r) {
    for (const auto& [name, s] : r.concepts) pool[keyphrase::normalize_descriptor(name)].concept_freq += s.freq;
    for (const auto& [name, s] : r.keyphrases) pool[keyphrase::normalize_descriptor(name)].keyphrase_freq += s.freq;
  };
  for (const auto& [_, agg] : aggregates)
    for (const auto& [__, b] : agg.periods) {
      add_role(b.first_author);
      add_role(b.non_first_author);
    }
  pool.erase("");
  if (pool.empty()) throw UserError("cannot build a vocabulary from an empty descriptor pool");

  std::vector<VocabEntry> entries;
  entries.reserve(pool.size());
  for (const auto& [name, p] : pool) {
    Origin origin = p.concept_freq > 0 && p.keyphrase_freq > 0 ? Origin::both
                    : p.concept_freq > 0                       ? Origin::concept_tag
                                                               : Origin::keyphrase;
    entries.push_back({name, origin, p.concept_freq + p.keyphrase_freq});
  }
  // `pool` is name-ordered, so a stable sort on frequency keeps the name tie-break.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const VocabEntry& a, const VocabEntry& b) { return a.corpus_frequency > b.corpus_frequency; });
  if (entries.size() > vocab_size) entries.resize(vocab_size);
  return DescriptorVocabulary(std::move(entries));
}

std::map<std::string, AuthorVector> build_vectors(const aggregate::AggregateMap& aggregates,
                                                  const DescriptorVocabulary& vocab, const WeightConfig& weights) {
  weights.validate();
  std::map<std::string, AuthorVector> out;
  for (const auto& [id, agg] : aggregates) out.emplace(id, author_vector<double>(agg, vocab, weights));
  return out;
}

nlohmann::ordered_json to_json(const DescriptorVocabulary& vocab, const WeightConfig& weights) {
  nlohmann::ordered_json j;
  j["weights"] = to_json(weights);
  j["size"] = vocab.size();
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : vocab.entries()) {
    nlohmann::ordered_json ej;
    ej["name"] = e.name;
    ej["origin"] = to_string(e.origin);
    ej["corpus_frequency"] = e.corpus_frequency;
    entries.push_back(std::move(ej));
  }
  return j;
}

DescriptorVocabulary vocabulary_from_json(const json& j) {
  std::vector<VocabEntry> entries;
  try {
    for (const auto& e : j.at("entries"))
      entries.push_back({e.at("name").get<std::string>(), origin_from_string(e.at("origin").get<std::string>()),
                         e.at("corpus_frequency").get<std::int64_t>()});
  } catch (const json::exception& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
  return DescriptorVocabulary(std::move(entries));
}

DescriptorVocabulary read_vocabulary(const std::filesystem::path& path, WeightConfig* weights) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (weights && j.contains("weights")) *weights = weights_from_json(j["weights"]);
  return vocabulary_from_json(j);
}

std::string write_vectors_jsonl(const std::map<std::string, AuthorVector>& vectors, const WeightConfig& weights,
                                Eigen::Index dimension) {
  std::string out;
  nlohmann::ordered_json meta;
  meta["_meta"]["dimension"] = dimension;
  meta["_meta"]["weights"] = to_json(weights);
  out += meta.dump() + "\n";
  for (const auto& [id, v] : vectors) {
    nlohmann::ordered_json j;
    j["author_id"] = id;
    auto& comps = j["components"] = nlohmann::ordered_json::array();
    for (SparseVector<double>::InnerIterator it(v.components); it; ++it) comps.push_back({it.index(), it.value()});
    out += j.dump() + "\n";
  }
  return out;
}

std::map<std::string, AuthorVector> read_vectors_jsonl(const std::filesystem::path& path, WeightConfig* weights) {
  std::map<std::string, AuthorVector> out;
  std::istringstream in(read_file(path));
  std::string line;
  Eigen::Index dimension = -1;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      if (j.contains("_meta")) {
        dimension = j["_meta"].at("dimension").get<Eigen::Index>();
        if (weights) *weights = weights_from_json(j["_meta"].at("weights"));
        continue;
      }
      if (dimension < 0) throw ParseError(path.string() + ": vectors file lacks its _meta header");
      AuthorVector v{j.at("author_id").get<std::string>(), SparseVector<double>(dimension)};
      for (const auto& pair : j.at("components")) {
        auto idx = pair.at(0).get<Eigen::Index>();
        if (idx < 0 || idx >= dimension) throw ParseError(path.string() + ": component index out of range");
        v.components.coeffRef(idx) = pair.at(1).get<double>();
      }
      out.emplace(v.author_id, std::move(v));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace akg::vectors
