#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "akg/core.hpp"

namespace akg::ingest {

inline constexpr const char* kBatterySeedConcept = "C555008776";

struct ConceptTag {
  std::string concept_id;
  std::string display_name;
  int level = 0;
  double score = 0.0;

  friend bool operator==(const ConceptTag&, const ConceptTag&) = default;
};

enum class AuthorPosition { first, middle, last };

std::string to_string(AuthorPosition p);
AuthorPosition position_from_string(std::string_view s);

struct AuthorRef {
  std::string author_id;
  std::string display_name;
  AuthorPosition position = AuthorPosition::middle;
  bool is_corresponding = false;
  std::optional<std::string> affiliation_name;
  std::optional<std::string> affiliation_id;

  friend bool operator==(const AuthorRef&, const AuthorRef&) = default;
};

using InvertedIndex = std::map<std::string, std::vector<std::int64_t>>;

// A harvested catalogue record, typed but not yet filtered. Concepts may
// still carry the seed concept or zero scores.
struct RawWork {
  std::string id;
  std::optional<std::string> doi;
  std::optional<std::string> title;
  std::optional<int> publication_year;
  std::optional<std::string> publication_date;
  std::vector<AuthorRef> authorships;
  std::vector<ConceptTag> concepts;
  std::optional<std::string> publisher_name;
  std::optional<std::string> source_name;
  std::optional<InvertedIndex> abstract_inverted_index;
};

struct WorkRecord {
  std::string work_id;
  std::optional<std::string> doi;
  std::string title;
  int publication_year = 0;
  std::string publication_date;
  std::optional<std::string> abstract_text;
  std::vector<AuthorRef> authorships;
  std::vector<ConceptTag> concepts;
  std::optional<std::string> publisher_name;
  std::optional<std::string> source_name;

  /// Works with neither title nor abstract are kept for their concepts but
  /// skipped by keyphrase extraction.
  bool missing_text() const { return title.empty() && !abstract_text; }

  friend bool operator==(const WorkRecord&, const WorkRecord&) = default;
};

enum class Rejection { pre_min_year, no_date };
std::string to_string(Rejection r);

using NormalizeResult = std::variant<WorkRecord, Rejection>;

// Identifier normalization: strips the catalogue URL prefix and uppercases
// the leading type letter ("https://openalex.org/a123" -> "A123").
std::string normalize_openalex_id(std::string_view raw);

/// Words placed at their positions and joined by single spaces. Gaps
/// collapse. Throws ParseError when two different words claim a position.
std::string reconstruct_abstract(const InvertedIndex& index);
/// Inverse of reconstruct_abstract for whitespace-tokenized text.
InvertedIndex invert_abstract(std::string_view text);

NormalizeResult normalize_work(const RawWork& raw, std::string_view seed_concept_id,
                               int min_year = 1990);

/// Projects a normalized record back into raw form (abstract re-inverted).
RawWork to_raw(const WorkRecord& w);

/// The n authors with the most works; ties broken by ascending author_id.
/// Result is in rank order.
std::vector<std::string> select_top_authors(std::span<const WorkRecord> corpus, std::size_t n);

// -- wire formats ------------------------------------------------------------

/// Parses one catalogue work object. Throws ParseError on shape violations.
RawWork parse_raw_work(const nlohmann::json& j);

nlohmann::ordered_json to_json(const WorkRecord& w);
WorkRecord work_from_json(const nlohmann::json& j);

std::string write_corpus_jsonl(std::span<const WorkRecord> works);
std::vector<WorkRecord> read_corpus_jsonl(const std::filesystem::path& path);

struct HarvestSummary {
  std::size_t fetched = 0;
  std::size_t rejected_pre1990 = 0;
  std::size_t rejected_no_date = 0;
  std::size_t kept = 0;
};
nlohmann::ordered_json to_json(const HarvestSummary& s);

// -- harvesting --------------------------------------------------------------

struct HarvestPage {
  std::vector<RawWork> works;
  std::optional<std::string> next_cursor;  // nullopt when exhausted
};

/// Parses an API page body ({"meta": {...}, "results": [...]}). `origin`
/// names the page in error messages.
HarvestPage parse_page(std::string_view body, const std::string& origin);

class PageSource {
 public:
  virtual ~PageSource() = default;
  /// `cursor` is "*" for the first page.
  virtual HarvestPage fetch(const std::string& seed_concept_id, const std::string& cursor) = 0;
};

// Offline source: every *.json file of a directory is one page, read in
// filename order. Cursors are "page:<n>".
class FixturePageSource : public PageSource {
 public:
  explicit FixturePageSource(std::filesystem::path dir);
  HarvestPage fetch(const std::string& seed_concept_id, const std::string& cursor) override;
  std::size_t page_count() const { return pages_.size(); }
  /// Parses every page with up to `parallelism` threads, results in page order.
  std::vector<HarvestPage> fetch_all(std::size_t parallelism) const;

 private:
  std::vector<std::filesystem::path> pages_;
};

// Spaces requests at least 1/rate seconds apart across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{8000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for

  std::chrono::milliseconds delay_for(int attempt) const;
};

// Live catalogue client with polite-pool headers, rate limiting, and
// bounded exponential backoff.
class HttpPageSource : public PageSource {
 public:
  HttpPageSource(std::string base_url, std::string contact_email, double requests_per_second = 10.0,
                 RetryPolicy retry = {}, int per_page = 200);
  HarvestPage fetch(const std::string& seed_concept_id, const std::string& cursor) override;

 private:
  std::string base_url_;
  std::string contact_email_;
  RateLimiter limiter_;
  RetryPolicy retry_;
  int per_page_;
};

/// Follows cursors until exhaustion. On a retriable failure the thrown
/// error message carries the last good cursor.
std::vector<RawWork> harvest_all(PageSource& source, const std::string& seed_concept_id);

struct IngestResult {
  std::vector<WorkRecord> works;
  HarvestSummary summary;
};

/// Normalizes in parallel chunks, preserving input order.
IngestResult normalize_all(std::span<const RawWork> raw, std::string_view seed_concept_id, int min_year,
                           std::size_t parallelism);

}  // namespace akg::ingest
