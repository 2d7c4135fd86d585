#include "akg/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "akg/core.hpp"

namespace akg::aggregate {

using nlohmann::json;

std::string_view period_key(Period p) {
  switch (p) {
    case Period::p1990_2000: return "1990-2000";
    case Period::p2001_2010: return "2001-2010";
    case Period::p2011_2023: return "2011-2023";
  }
  return "2011-2023";
}

Period period_from_key(std::string_view key) {
  for (auto p : kPeriods)
    if (period_key(p) == key) return p;
  throw ParseError("unknown period key '" + std::string(key) + "'");
}

Period period_of(int year) {
  if (year < 1990) throw UserError("year " + std::to_string(year) + " is before the first period");
  if (year <= 2000) return Period::p1990_2000;
  if (year <= 2010) return Period::p2001_2010;
  return Period::p2011_2023;
}

void DescriptorStat::add(double confidence) {
  ++freq;
  confidence_units += std::llround(std::clamp(confidence, 0.0, 1.0) * kUnitsPerConfidence);
}

void DescriptorStat::merge(const DescriptorStat& o) {
  freq += o.freq;
  confidence_units += o.confidence_units;
  freq_title += o.freq_title;
  freq_abstract += o.freq_abstract;
}

double DescriptorStat::avg_confidence_score() const {
  if (freq == 0) return 0.0;
  return static_cast<double>(confidence_units) / static_cast<double>(freq) / kUnitsPerConfidence;
}

void RoleBucket::merge(const RoleBucket& o) {
  for (const auto& [k, v] : o.concepts) concepts[k].merge(v);
  for (const auto& [k, v] : o.keyphrases) keyphrases[k].merge(v);
  for (const auto& [k, v] : o.co_authors) co_authors[k] += v;
}

void PeriodBucket::merge(const PeriodBucket& o) {
  nb_publications += o.nb_publications;
  nb_publications_first_author += o.nb_publications_first_author;
  nb_publications_non_first_author += o.nb_publications_non_first_author;
  nb_publications_corresponding += o.nb_publications_corresponding;
  first_author.merge(o.first_author);
  non_first_author.merge(o.non_first_author);
}

void AuthorAggregate::merge(const AuthorAggregate& o) {
  if (author_id.empty()) author_id = o.author_id;
  for (const auto& [p, b] : o.periods) periods[p].merge(b);
}

std::int64_t AuthorAggregate::nb_publications() const {
  std::int64_t n = 0;
  for (const auto& [_, b] : periods) n += b.nb_publications;
  return n;
}

AggregateMap build_aggregates(std::span<const ingest::WorkRecord> works,
                              std::span<const keyphrase::KeyphraseSet> keyphrases,
                              const std::set<std::string>& selected_authors) {
  std::unordered_map<std::string_view, const ingest::WorkRecord*> by_id;
  for (const auto& w : works) by_id.emplace(w.work_id, &w);
  std::unordered_map<std::string_view, const keyphrase::KeyphraseSet*> kp_by_work;
  std::vector<std::string> dangling;
  for (const auto& k : keyphrases) {
    if (!by_id.contains(k.work_id)) {
      dangling.push_back(k.work_id);
      continue;
    }
    kp_by_work.emplace(k.work_id, &k);
  }
  if (!dangling.empty()) {
    std::string msg = "keyphrase sets reference unknown works:";
    for (const auto& id : dangling) msg += " " + id;
    throw ConsistencyError(msg);
  }

  AggregateMap out;
  for (const auto& w : works) {
    const Period period = period_of(w.publication_year);
    const keyphrase::KeyphraseSet* kp = nullptr;
    if (auto it = kp_by_work.find(w.work_id); it != kp_by_work.end()) kp = it->second;

    // First occurrence wins when an author is listed twice on one work.
    std::vector<const ingest::AuthorRef*> authors;
    std::unordered_set<std::string_view> seen;
    for (const auto& a : w.authorships)
      if (seen.insert(a.author_id).second) authors.push_back(&a);

    for (const auto* a : authors) {
      if (!selected_authors.contains(a->author_id)) continue;
      auto& agg = out[a->author_id];
      agg.author_id = a->author_id;
      auto& bucket = agg.periods[period];
      ++bucket.nb_publications;
      const bool first = a->position == ingest::AuthorPosition::first;
      ++(first ? bucket.nb_publications_first_author : bucket.nb_publications_non_first_author);
      if (a->is_corresponding) ++bucket.nb_publications_corresponding;
      RoleBucket& role = first ? bucket.first_author : bucket.non_first_author;

      for (const auto& c : w.concepts) {
        auto name = keyphrase::normalize_descriptor(c.display_name);
        if (!name.empty()) role.concepts[name].add(c.score);
      }
      if (kp) {
        for (const auto& k : kp->title_keyphrases) {
          auto& stat = role.keyphrases[keyphrase::normalize_descriptor(k.normalized_text)];
          stat.add(k.confidence);
          ++stat.freq_title;
        }
        for (const auto& k : kp->abstract_keyphrases) {
          auto& stat = role.keyphrases[keyphrase::normalize_descriptor(k.normalized_text)];
          stat.add(k.confidence);
          ++stat.freq_abstract;
        }
      }
      for (const auto* other : authors)
        if (other != a) ++role.co_authors[other->author_id];
    }
  }
  return out;
}

void merge(AggregateMap& into, const AggregateMap& from) {
  for (const auto& [id, agg] : from) into[id].merge(agg);
}

std::map<std::string, std::int64_t> merged_co_authors(const AuthorAggregate& a) {
  std::map<std::string, std::int64_t> out;
  for (const auto& [_, b] : a.periods) {
    for (const auto& [id, n] : b.first_author.co_authors) out[id] += n;
    for (const auto& [id, n] : b.non_first_author.co_authors) out[id] += n;
  }
  return out;
}

// -- JSON --------------------------------------------------------------------

namespace {

nlohmann::ordered_json stats_json(const std::map<std::string, DescriptorStat>& stats, bool with_sources) {
  auto j = nlohmann::ordered_json::object();
  for (const auto& [name, s] : stats) {
    nlohmann::ordered_json sj;
    sj["freq"] = s.freq;
    sj["avg_confidence_score"] = s.avg_confidence_score();
    if (with_sources) {
      sj["freq_title"] = s.freq_title;
      sj["freq_abstract"] = s.freq_abstract;
    }
    j[name] = std::move(sj);
  }
  return j;
}

nlohmann::ordered_json role_json(const RoleBucket& r) {
  nlohmann::ordered_json j;
  j["concepts"] = stats_json(r.concepts, false);
  j["keyphrases"] = stats_json(r.keyphrases, true);
  auto& co = j["co_authors"] = nlohmann::ordered_json::object();
  for (const auto& [id, n] : r.co_authors) co[id] = n;
  return j;
}

std::map<std::string, DescriptorStat> stats_from_json(const json& j) {
  std::map<std::string, DescriptorStat> out;
  for (const auto& [name, sj] : j.items()) {
    DescriptorStat s;
    s.freq = sj.at("freq").get<std::int64_t>();
    const double avg = sj.at("avg_confidence_score").get<double>();
    s.confidence_units = std::llround(avg * static_cast<double>(s.freq) * DescriptorStat::kUnitsPerConfidence);
    s.freq_title = sj.value("freq_title", std::int64_t{0});
    s.freq_abstract = sj.value("freq_abstract", std::int64_t{0});
    out.emplace(name, s);
  }
  return out;
}

RoleBucket role_from_json(const json& j) {
  RoleBucket r;
  r.concepts = stats_from_json(j.at("concepts"));
  r.keyphrases = stats_from_json(j.at("keyphrases"));
  for (const auto& [id, n] : j.at("co_authors").items()) r.co_authors[id] = n.get<std::int64_t>();
  return r;
}

}  // namespace

nlohmann::ordered_json to_json(const AuthorAggregate& a) {
  nlohmann::ordered_json periods = nlohmann::ordered_json::object();
  for (const auto& [p, b] : a.periods) {
    nlohmann::ordered_json bj;
    bj["nb_publications"] = b.nb_publications;
    bj["nb_publications_first_author"] = b.nb_publications_first_author;
    bj["nb_publications_non_first_author"] = b.nb_publications_non_first_author;
    bj["nb_publications_corresponding"] = b.nb_publications_corresponding;
    bj["non_first_author"] = role_json(b.non_first_author);
    bj["first_author"] = role_json(b.first_author);
    periods[std::string(period_key(p))] = std::move(bj);
  }
  nlohmann::ordered_json j;
  j[a.author_id] = std::move(periods);
  return j;
}

AuthorAggregate aggregate_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) throw ParseError("aggregate line must hold exactly one author");
  AuthorAggregate a;
  try {
    a.author_id = j.begin().key();
    for (const auto& [key, bj] : j.begin().value().items()) {
      PeriodBucket b;
      b.nb_publications = bj.at("nb_publications").get<std::int64_t>();
      b.nb_publications_first_author = bj.at("nb_publications_first_author").get<std::int64_t>();
      b.nb_publications_non_first_author = bj.at("nb_publications_non_first_author").get<std::int64_t>();
      b.nb_publications_corresponding = bj.value("nb_publications_corresponding", std::int64_t{0});
      b.first_author = role_from_json(bj.at("first_author"));
      b.non_first_author = role_from_json(bj.at("non_first_author"));
      a.periods.emplace(period_from_key(key), std::move(b));
    }
  } catch (const json::exception& e) {
    throw ParseError("aggregate for " + a.author_id + ": " + e.what());
  }
  return a;
}

std::string write_aggregates_jsonl(const AggregateMap& aggregates) {
  std::string out;
  for (const auto& [_, a] : aggregates) {
    out += to_json(a).dump();
    out.push_back('\n');
  }
  return out;
}

AggregateMap read_aggregates_jsonl(const std::filesystem::path& path) {
  AggregateMap out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      auto a = aggregate_from_json(json::parse(line));
      out.emplace(a.author_id, std::move(a));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, AuthorInfo> build_author_infos(std::span<const ingest::WorkRecord> works,
                                                     const std::set<std::string>& restrict_to) {
  struct Latest {
    const ingest::WorkRecord* work = nullptr;
    const ingest::AuthorRef* ref = nullptr;
    std::set<std::string_view> work_ids;
  };
  std::map<std::string, Latest> latest;
  for (const auto& w : works) {
    for (const auto& a : w.authorships) {
      if (!restrict_to.empty() && !restrict_to.contains(a.author_id)) continue;
      auto& l = latest[a.author_id];
      l.work_ids.insert(w.work_id);
      bool newer = !l.work || w.publication_date > l.work->publication_date ||
                   (w.publication_date == l.work->publication_date && w.work_id > l.work->work_id);
      if (newer) {
        l.work = &w;
        l.ref = &a;
      }
    }
  }
  std::map<std::string, AuthorInfo> out;
  for (const auto& [id, l] : latest) {
    AuthorInfo info;
    info.author_id = id;
    info.display_name = l.ref->display_name;
    info.nb_publications = static_cast<std::int64_t>(l.work_ids.size());
    info.latest_affiliation_name = l.ref->affiliation_name;
    info.latest_affiliation_id = l.ref->affiliation_id;
    out.emplace(id, std::move(info));
  }
  return out;
}

std::string write_author_infos_jsonl(const std::map<std::string, AuthorInfo>& infos) {
  std::string out;
  for (const auto& [_, i] : infos) {
    nlohmann::ordered_json j;
    j["author_id"] = i.author_id;
    j["display_name"] = i.display_name;
    j["nb_publications"] = i.nb_publications;
    j["latest_affiliation_name"] = i.latest_affiliation_name ? json(*i.latest_affiliation_name) : json(nullptr);
    j["latest_affiliation_id"] = i.latest_affiliation_id ? json(*i.latest_affiliation_id) : json(nullptr);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::map<std::string, AuthorInfo> read_author_infos_jsonl(const std::filesystem::path& path) {
  std::map<std::string, AuthorInfo> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      AuthorInfo i;
      i.author_id = j.at("author_id").get<std::string>();
      i.display_name = j.at("display_name").get<std::string>();
      i.nb_publications = j.at("nb_publications").get<std::int64_t>();
      if (!j["latest_affiliation_name"].is_null()) i.latest_affiliation_name = j["latest_affiliation_name"].get<std::string>();
      if (!j["latest_affiliation_id"].is_null()) i.latest_affiliation_id = j["latest_affiliation_id"].get<std::string>();
      out.emplace(i.author_id, std::move(i));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace akg::aggregate
