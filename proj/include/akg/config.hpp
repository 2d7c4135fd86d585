#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "akg/keyphrase.hpp"
#include "akg/vectors.hpp"

namespace akg {

struct IngestConfig {
  std::string seed_concept_id = "C555008776";
  int min_year = 1990;
  std::size_t top_n_authors = 10000;
  std::size_t parallelism = 4;
  std::string contact_email;
  std::string fixture_dir;  // offline mode when set
  std::string api_base = "https://api.openalex.org";
  double requests_per_second = 10.0;
};

struct KeyphraseConfig {
  std::string kind = "embedding_rank";  // or "llm_http"
  std::string endpoint;
  std::string model_name;
  std::string embedder = "hash";
  std::size_t max_title = 2;
  std::size_t max_abstract = 10;
};

struct EvalSettings {
  double tau = 0.6;
  std::string embedder = "hash";
  std::string embedder_endpoint;
  std::string embedder_model;
};

struct SimgraphConfig {
  double threshold = 0.35;
  std::size_t max_neighbors = 25;
  int community_max_iterations = 100;
};

struct RdfConfig {
  std::string namespace_iri = "https://example.org/akg/";
  bool allow_network = false;
  std::string wikidata_endpoint = "https://www.wikidata.org/w/api.php";
  std::string predicates_file;  // empty: built-in table
};

struct ServiceConfig {
  std::string bind_addr = "127.0.0.1:8080";
  std::string cors_origin;
  std::string ui_dir;
};

struct Config {
  IngestConfig ingest;
  KeyphraseConfig keyphrase;
  EvalSettings eval;
  std::size_t vocab_size = 1000;
  vectors::WeightConfig weights;
  SimgraphConfig simgraph;
  RdfConfig rdf;
  ServiceConfig service;

  /// Validates and throws UserError naming the offending key.
  void validate() const;
  keyphrase::ExtractorSpec extractor_spec() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const Config& c);

}  // namespace akg
