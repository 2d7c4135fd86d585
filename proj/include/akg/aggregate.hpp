#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "akg/ingest.hpp"
#include "akg/keyphrase.hpp"

namespace akg::aggregate {

enum class Period { p1990_2000 = 0, p2001_2010 = 1, p2011_2023 = 2 };
inline constexpr std::array<Period, 3> kPeriods{Period::p1990_2000, Period::p2001_2010, Period::p2011_2023};

/// "1990-2000", "2001-2010" or "2011-2023".
std::string_view period_key(Period p);
Period period_from_key(std::string_view key);
/// Years after 2023 fold into the latest period. Throws for years < 1990.
Period period_of(int year);

// Confidences are accumulated in fixed point (1e-9) so that merging shards
// is exactly associative and commutative.
struct DescriptorStat {
  static constexpr double kUnitsPerConfidence = 1e9;

  std::int64_t freq = 0;
  std::int64_t confidence_units = 0;
  std::int64_t freq_title = 0;     // keyphrases only
  std::int64_t freq_abstract = 0;  // keyphrases only

  void add(double confidence);
  void merge(const DescriptorStat& other);
  double avg_confidence_score() const;

  friend bool operator==(const DescriptorStat&, const DescriptorStat&) = default;
};

struct RoleBucket {
  std::map<std::string, DescriptorStat> concepts;
  std::map<std::string, DescriptorStat> keyphrases;
  std::map<std::string, std::int64_t> co_authors;

  void merge(const RoleBucket& other);
  bool empty() const { return concepts.empty() && keyphrases.empty() && co_authors.empty(); }

  friend bool operator==(const RoleBucket&, const RoleBucket&) = default;
};

struct PeriodBucket {
  std::int64_t nb_publications = 0;
  std::int64_t nb_publications_first_author = 0;
  std::int64_t nb_publications_non_first_author = 0;
  std::int64_t nb_publications_corresponding = 0;
  RoleBucket first_author;
  RoleBucket non_first_author;

  void merge(const PeriodBucket& other);

  friend bool operator==(const PeriodBucket&, const PeriodBucket&) = default;
};

struct AuthorAggregate {
  std::string author_id;
  std::map<Period, PeriodBucket> periods;  // empty buckets omitted

  void merge(const AuthorAggregate& other);
  std::int64_t nb_publications() const;

  friend bool operator==(const AuthorAggregate&, const AuthorAggregate&) = default;
};

using AggregateMap = std::map<std::string, AuthorAggregate>;

/// Accumulates every work into the buckets of each selected author on it.
/// Throws ConsistencyError when a keyphrase set names an unknown work.
AggregateMap build_aggregates(std::span<const ingest::WorkRecord> works,
                              std::span<const keyphrase::KeyphraseSet> keyphrases,
                              const std::set<std::string>& selected_authors);

/// Commutative, associative merge; `into` absorbs `from`.
void merge(AggregateMap& into, const AggregateMap& from);

/// Role-merged co-author counts across all periods.
std::map<std::string, std::int64_t> merged_co_authors(const AuthorAggregate& a);

// Listing-style JSON: {"<author_id>": {"<period>": {...}}}.
nlohmann::ordered_json to_json(const AuthorAggregate& a);
AuthorAggregate aggregate_from_json(const nlohmann::json& j);
std::string write_aggregates_jsonl(const AggregateMap& aggregates);
AggregateMap read_aggregates_jsonl(const std::filesystem::path& path);

// Per-author display data, taken from the author's most recent work
// (ties: greatest work_id).
struct AuthorInfo {
  std::string author_id;
  std::string display_name;
  std::int64_t nb_publications = 0;
  std::optional<std::string> latest_affiliation_name;
  std::optional<std::string> latest_affiliation_id;

  friend bool operator==(const AuthorInfo&, const AuthorInfo&) = default;
};

/// Info for every author on the given works, or only `restrict_to` when non-empty.
std::map<std::string, AuthorInfo> build_author_infos(std::span<const ingest::WorkRecord> works,
                                                     const std::set<std::string>& restrict_to = {});
std::string write_author_infos_jsonl(const std::map<std::string, AuthorInfo>& infos);
std::map<std::string, AuthorInfo> read_author_infos_jsonl(const std::filesystem::path& path);

}  // namespace akg::aggregate
