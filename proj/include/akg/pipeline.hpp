#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "akg/config.hpp"

namespace akg::pipeline {

enum class Stage { ingest, extract, eval, aggregate, vectorize, simgraph, rdf };

inline constexpr Stage kAllStages[] = {Stage::ingest,    Stage::extract,  Stage::eval, Stage::aggregate,
                                       Stage::vectorize, Stage::simgraph, Stage::rdf};

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);
/// Stages whose outputs `s` consumes.
std::vector<Stage> upstream_of(Stage s);

// Artifact paths relative to the data directory.
namespace paths {
inline constexpr const char* works = "corpus/works.jsonl";
inline constexpr const char* harvest_summary = "corpus/harvest_summary.json";
inline constexpr const char* selected_authors = "corpus/selected_authors.json";
inline constexpr const char* keyphrases = "corpus/keyphrases.jsonl";
inline constexpr const char* aggregates = "corpus/aggregates.jsonl";
inline constexpr const char* authors = "corpus/authors.jsonl";
inline constexpr const char* vocabulary = "corpus/vocabulary.json";
inline constexpr const char* vectors = "corpus/vectors.jsonl";
inline constexpr const char* neighbors = "corpus/neighbors.jsonl";
inline constexpr const char* communities = "corpus/communities.json";
inline constexpr const char* eval_dir = "eval";
inline constexpr const char* comparison = "eval/comparison.tsv";
inline constexpr const char* ntriples = "export/graph.nt";
inline constexpr const char* turtle = "export/graph.ttl";
inline constexpr const char* wikidata_cache = "export/wikidata_cache.json";
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* lock = ".akg.lock";
}  // namespace paths

using Digests = std::map<std::string, std::string>;  // relative path -> sha256

struct StageRecord {
  std::string completed_at;
  std::string params_digest;
  Digests inputs;
  Digests outputs;
  std::optional<std::string> skipped_reason;  // stage had nothing to do
};

struct Manifest {
  nlohmann::ordered_json config;
  std::map<Stage, StageRecord> stages;

  static Manifest load(const std::filesystem::path& data_dir);  // missing file -> empty
  nlohmann::ordered_json to_json() const;
};

// Whole-directory advisory lock (flock). Stages take it exclusively, the
// server shares it.
class DirectoryLock {
 public:
  DirectoryLock(const std::filesystem::path& data_dir, bool exclusive);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

struct StageOutcome {
  Stage stage;
  bool ran = false;
  std::string message;
};

class Pipeline {
 public:
  Pipeline(Config config, std::filesystem::path data_dir, bool force = false);

  /// Runs one stage. Throws DependencyError when an upstream stage is
  /// missing or stale. Rerunning with unchanged inputs is a no-op.
  StageOutcome run(Stage s);
  /// Every stage in order.
  std::vector<StageOutcome> run_all();

  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& data_dir() const { return data_dir_; }
  /// Empty when the stage is complete and its recorded inputs and outputs
  /// still match the files on disk; otherwise the reason.
  std::optional<std::string> staleness(Stage s) const;

 private:
  std::filesystem::path path(const std::string& rel) const { return data_dir_ / rel; }
  std::string params_digest(Stage s) const;
  Digests current_inputs(Stage s) const;
  void check_upstream(Stage s) const;
  void commit(Stage s, Digests inputs, std::vector<std::string> outputs, std::optional<std::string> skipped = {});

  StageOutcome run_ingest();
  StageOutcome run_extract();
  StageOutcome run_eval();
  StageOutcome run_aggregate();
  StageOutcome run_vectorize();
  StageOutcome run_simgraph();
  StageOutcome run_rdf();

  Config config_;
  std::filesystem::path data_dir_;
  bool force_;
  Manifest manifest_;
};

}  // namespace akg::pipeline
