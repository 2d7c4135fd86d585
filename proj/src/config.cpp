#include "akg/config.hpp"

#include <set>

#include "akg/core.hpp"

namespace akg {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) throw UserError(std::string("config: '") + name + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw UserError("config: " + name_ + "." + key + " has the wrong type");
    }
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, _] : node_->items())
      if (!seen_.contains(k)) throw UserError("config: unknown key " + name_ + "." + k);
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

void Config::validate() const {
  const auto& seed = ingest.seed_concept_id;
  if (seed.size() < 2 || seed[0] != 'C' ||
      seed.find_first_not_of("0123456789", 1) != std::string::npos)
    throw UserError("config: ingest.seed_concept_id must be 'C' followed by digits, got '" + seed + "'");
  if (ingest.top_n_authors == 0) throw UserError("config: ingest.top_n_authors must be positive");
  if (ingest.parallelism == 0) throw UserError("config: ingest.parallelism must be positive");
  if (!(ingest.requests_per_second > 0)) throw UserError("config: ingest.requests_per_second must be positive");
  if (keyphrase.kind != "embedding_rank" && keyphrase.kind != "llm_http")
    throw UserError("config: keyphrase.kind must be 'embedding_rank' or 'llm_http'");
  if (keyphrase.kind == "llm_http" && (keyphrase.endpoint.empty() || keyphrase.model_name.empty()))
    throw UserError("config: keyphrase.kind 'llm_http' needs keyphrase.endpoint and keyphrase.model_name");
  if (!(eval.tau >= 0.0 && eval.tau <= 1.0)) throw UserError("config: eval.tau must lie in [0, 1]");
  if (vocab_size == 0) throw UserError("config: vectors.vocab_size must be positive");
  weights.validate();
  if (!(simgraph.threshold >= 0.0 && simgraph.threshold <= 1.0))
    throw UserError("config: simgraph.threshold must lie in [0, 1]");
  if (simgraph.community_max_iterations <= 0)
    throw UserError("config: simgraph.community_max_iterations must be positive");
  if (rdf.namespace_iri.empty() || rdf.namespace_iri.back() != '/')
    throw UserError("config: rdf.namespace must end with '/'");
  if (service.bind_addr.find(':') == std::string::npos)
    throw UserError("config: service.bind_addr must be host:port");
}

keyphrase::ExtractorSpec Config::extractor_spec() const {
  keyphrase::ExtractorSpec spec;
  spec.kind = keyphrase.kind == "llm_http" ? keyphrase::ExtractorKind::llm_http
                                           : keyphrase::ExtractorKind::embedding_rank;
  if (!keyphrase.endpoint.empty()) spec.endpoint = keyphrase.endpoint;
  if (!keyphrase.model_name.empty()) spec.model_name = keyphrase.model_name;
  spec.prompt_template = keyphrase::kDefaultPromptTemplate;
  spec.max_title = keyphrase.max_title;
  spec.max_abstract = keyphrase.max_abstract;
  return spec;
}

Config config_from_json(const json& j) {
  if (!j.is_object()) throw UserError("config: top level must be an object");
  static const std::set<std::string> sections = {"ingest", "keyphrase", "eval", "vectors",
                                                 "simgraph", "rdf", "service"};
  for (const auto& [k, _] : j.items())
    if (!sections.contains(k)) throw UserError("config: unknown section '" + k + "'");

  Config c;
  Section in(j, "ingest");
  in.read("seed_concept_id", c.ingest.seed_concept_id);
  in.read("min_year", c.ingest.min_year);
  in.read("top_n_authors", c.ingest.top_n_authors);
  in.read("parallelism", c.ingest.parallelism);
  in.read("contact_email", c.ingest.contact_email);
  in.read("fixture_dir", c.ingest.fixture_dir);
  in.read("api_base", c.ingest.api_base);
  in.read("requests_per_second", c.ingest.requests_per_second);
  in.finish();

  Section kp(j, "keyphrase");
  kp.read("kind", c.keyphrase.kind);
  kp.read("endpoint", c.keyphrase.endpoint);
  kp.read("model_name", c.keyphrase.model_name);
  kp.read("embedder", c.keyphrase.embedder);
  kp.read("max_title", c.keyphrase.max_title);
  kp.read("max_abstract", c.keyphrase.max_abstract);
  kp.finish();

  Section ev(j, "eval");
  ev.read("tau", c.eval.tau);
  ev.read("embedder", c.eval.embedder);
  ev.read("embedder_endpoint", c.eval.embedder_endpoint);
  ev.read("embedder_model", c.eval.embedder_model);
  ev.finish();

  Section vec(j, "vectors");
  vec.read("vocab_size", c.vocab_size);
  vec.read("f_p0", c.weights.period_factors[0]);
  vec.read("f_p1", c.weights.period_factors[1]);
  vec.read("f_p2", c.weights.period_factors[2]);
  vec.read("w_first", c.weights.w_first);
  vec.read("w_nonfirst", c.weights.w_nonfirst);
  vec.read("w_c", c.weights.w_c);
  vec.read("w_pa", c.weights.w_pa);
  vec.read("w_pt", c.weights.w_pt);
  vec.finish();

  Section sg(j, "simgraph");
  sg.read("threshold", c.simgraph.threshold);
  sg.read("max_neighbors", c.simgraph.max_neighbors);
  sg.read("community_max_iterations", c.simgraph.community_max_iterations);
  sg.finish();

  Section rdf(j, "rdf");
  rdf.read("namespace", c.rdf.namespace_iri);
  rdf.read("allow_network", c.rdf.allow_network);
  rdf.read("wikidata_endpoint", c.rdf.wikidata_endpoint);
  rdf.read("predicates_file", c.rdf.predicates_file);
  rdf.finish();

  Section svc(j, "service");
  svc.read("bind_addr", c.service.bind_addr);
  svc.read("cors_origin", c.service.cors_origin);
  svc.read("ui_dir", c.service.ui_dir);
  svc.finish();

  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UserError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::ordered_json to_json(const Config& c) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json in;
  in["seed_concept_id"] = c.ingest.seed_concept_id;
  in["min_year"] = c.ingest.min_year;
  in["top_n_authors"] = c.ingest.top_n_authors;
  in["parallelism"] = c.ingest.parallelism;
  in["contact_email"] = c.ingest.contact_email;
  in["fixture_dir"] = c.ingest.fixture_dir;
  in["api_base"] = c.ingest.api_base;
  in["requests_per_second"] = c.ingest.requests_per_second;
  nlohmann::ordered_json kp;
  kp["kind"] = c.keyphrase.kind;
  kp["endpoint"] = c.keyphrase.endpoint;
  kp["model_name"] = c.keyphrase.model_name;
  kp["embedder"] = c.keyphrase.embedder;
  kp["max_title"] = c.keyphrase.max_title;
  kp["max_abstract"] = c.keyphrase.max_abstract;
  nlohmann::ordered_json ev;
  ev["tau"] = c.eval.tau;
  ev["embedder"] = c.eval.embedder;
  ev["embedder_endpoint"] = c.eval.embedder_endpoint;
  ev["embedder_model"] = c.eval.embedder_model;
  nlohmann::ordered_json vec;
  vec["vocab_size"] = c.vocab_size;
  const auto weights = vectors::to_json(c.weights);
  for (const auto& [k, v] : weights.items()) vec[k] = v;
  nlohmann::ordered_json sg;
  sg["threshold"] = c.simgraph.threshold;
  sg["max_neighbors"] = c.simgraph.max_neighbors;
  sg["community_max_iterations"] = c.simgraph.community_max_iterations;
  nlohmann::ordered_json rdf;
  rdf["namespace"] = c.rdf.namespace_iri;
  rdf["allow_network"] = c.rdf.allow_network;
  rdf["wikidata_endpoint"] = c.rdf.wikidata_endpoint;
  rdf["predicates_file"] = c.rdf.predicates_file;
  nlohmann::ordered_json svc;
  svc["bind_addr"] = c.service.bind_addr;
  svc["cors_origin"] = c.service.cors_origin;
  svc["ui_dir"] = c.service.ui_dir;
  j["ingest"] = std::move(in);
  j["keyphrase"] = std::move(kp);
  j["eval"] = std::move(ev);
  j["vectors"] = std::move(vec);
  j["simgraph"] = std::move(sg);
  j["rdf"] = std::move(rdf);
  j["service"] = std::move(svc);
  return j;
}

}  // namespace akg
