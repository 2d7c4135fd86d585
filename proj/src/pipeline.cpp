#include "akg/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <iostream>
#include <set>
#include <thread>

#include "akg/aggregate.hpp"
#include "akg/core.hpp"
#include "akg/embedding.hpp"
#include "akg/eval.hpp"
#include "akg/ingest.hpp"
#include "akg/keyphrase.hpp"
#include "akg/rdf.hpp"
#include "akg/simgraph.hpp"
#include "akg/vectors.hpp"

namespace akg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::extract: return "extract";
    case Stage::eval: return "eval";
    case Stage::aggregate: return "aggregate";
    case Stage::vectorize: return "vectorize";
    case Stage::simgraph: return "simgraph";
    case Stage::rdf: return "rdf";
  }
  return "ingest";
}

Stage stage_from_string(std::string_view s) {
  for (auto st : kAllStages)
    if (to_string(st) == s) return st;
  throw UserError("unknown stage '" + std::string(s) + "'");
}

std::vector<Stage> upstream_of(Stage s) {
  switch (s) {
    case Stage::ingest:
    case Stage::eval: return {};
    case Stage::extract: return {Stage::ingest};
    case Stage::aggregate: return {Stage::ingest, Stage::extract};
    case Stage::vectorize: return {Stage::aggregate};
    case Stage::simgraph: return {Stage::aggregate, Stage::vectorize};
    case Stage::rdf: return {Stage::ingest, Stage::extract, Stage::vectorize};
  }
  return {};
}

// -- manifest ----------------------------------------------------------------

Manifest Manifest::load(const fs::path& data_dir) {
  Manifest m;
  const auto file = data_dir / paths::manifest;
  if (!fs::exists(file)) return m;
  try {
    auto j = json::parse(read_file(file));
    m.config = j.value("config", ordered_json::object());
    for (const auto& [name, r] : j.at("stages").items()) {
      StageRecord rec;
      rec.completed_at = r.at("completed_at").get<std::string>();
      rec.params_digest = r.at("params_digest").get<std::string>();
      rec.inputs = r.at("inputs").get<Digests>();
      rec.outputs = r.at("outputs").get<Digests>();
      if (r.contains("skipped")) rec.skipped_reason = r["skipped"].get<std::string>();
      m.stages.emplace(stage_from_string(name), std::move(rec));
    }
  } catch (const json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  return m;
}

ordered_json Manifest::to_json() const {
  ordered_json j;
  j["version"] = 1;
  j["config"] = config;
  auto& stages_json = j["stages"] = ordered_json::object();
  for (auto s : kAllStages) {
    auto it = stages.find(s);
    if (it == stages.end()) continue;
    const auto& r = it->second;
    ordered_json rj;
    rj["completed_at"] = r.completed_at;
    rj["params_digest"] = r.params_digest;
    rj["inputs"] = r.inputs;
    rj["outputs"] = r.outputs;
    if (r.skipped_reason) rj["skipped"] = *r.skipped_reason;
    stages_json[std::string(to_string(s))] = std::move(rj);
  }
  return j;
}

DirectoryLock::DirectoryLock(const fs::path& data_dir, bool exclusive) {
  fs::create_directories(data_dir);
  const auto file = data_dir / paths::lock;
  fd_ = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw UserError("cannot open lock file " + file.string());
  if (::flock(fd_, (exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw UserError("data directory " + data_dir.string() +
                    " is in use by another akg process (pipeline stage or server)");
  }
}

DirectoryLock::~DirectoryLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// -- helpers -----------------------------------------------------------------

namespace {

void write_json(const fs::path& p, const ordered_json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

std::vector<std::string> read_selected(const fs::path& p) {
  try {
    return json::parse(read_file(p)).at("authors").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

// Works on which at least one selected author appears.
std::vector<ingest::WorkRecord> selected_works(std::vector<ingest::WorkRecord> works,
                                               const std::set<std::string>& selected) {
  std::erase_if(works, [&](const ingest::WorkRecord& w) {
    return std::none_of(w.authorships.begin(), w.authorships.end(),
                        [&](const ingest::AuthorRef& a) { return selected.contains(a.author_id); });
  });
  return works;
}

void digest_tree(const fs::path& root, const fs::path& dir, Digests& out, const std::set<fs::path>& skip = {}) {
  if (!fs::is_directory(dir)) return;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    bool skipped = false;
    for (const auto& s : skip)
      if (std::mismatch(s.begin(), s.end(), e.path().begin(), e.path().end()).first == s.end()) skipped = true;
    if (!skipped) out[fs::relative(e.path(), root).generic_string()] = sha256_file(e.path());
  }
}

std::string model_dir_name(std::string name) {
  for (auto& c : name)
    if (c == '/' || c == ':' || c == ' ') c = '_';
  return name;
}

}  // namespace

// -- pipeline ----------------------------------------------------------------

Pipeline::Pipeline(Config config, fs::path data_dir, bool force)
    : config_(std::move(config)), data_dir_(std::move(data_dir)), force_(force) {
  config_.validate();
  manifest_ = Manifest::load(data_dir_);
}

std::string Pipeline::params_digest(Stage s) const {
  const auto c = to_json(config_);
  ordered_json p;
  switch (s) {
    case Stage::ingest: p = c["ingest"]; break;
    case Stage::extract: p = c["keyphrase"]; break;
    case Stage::eval: p = {{"eval", c["eval"]}, {"keyphrase", c["keyphrase"]}}; break;
    case Stage::aggregate: p = ordered_json::object(); break;
    case Stage::vectorize: p = c["vectors"]; break;
    case Stage::simgraph: p = c["simgraph"]; break;
    case Stage::rdf: p = c["rdf"]; break;
  }
  return sha256_hex(p.dump());
}

Digests Pipeline::current_inputs(Stage s) const {
  Digests d;
  auto add = [&](const char* rel) {
    if (fs::exists(path(rel))) d[rel] = sha256_file(path(rel));
    else d[rel] = "missing";
  };
  switch (s) {
    case Stage::ingest:
      if (!config_.ingest.fixture_dir.empty()) {
        const fs::path dir = config_.ingest.fixture_dir;
        if (!fs::is_directory(dir)) throw UserError("fixture directory " + dir.string() + " does not exist");
        for (const auto& e : fs::directory_iterator(dir))
          if (e.is_regular_file() && e.path().extension() == ".json")
            d["fixture/" + e.path().filename().string()] = sha256_file(e.path());
      }
      break;
    case Stage::extract:
      add(paths::works);
      add(paths::selected_authors);
      break;
    case Stage::eval: {
      const auto root = path(paths::eval_dir);
      digest_tree(data_dir_, root / "expected", d);
      digest_tree(data_dir_, root / "documents", d);
      std::set<fs::path> skip;
      if (fs::is_directory(root / "documents")) {
        auto ex = keyphrase::make_extractor(config_.extractor_spec(),
                                            make_embedding_provider(config_.keyphrase.embedder));
        skip.insert(root / "predicted" / model_dir_name(ex->name()));
      }
      digest_tree(data_dir_, root / "predicted", d, skip);
      break;
    }
    case Stage::aggregate:
      add(paths::works);
      add(paths::selected_authors);
      add(paths::keyphrases);
      break;
    case Stage::vectorize: add(paths::aggregates); break;
    case Stage::simgraph:
      add(paths::aggregates);
      add(paths::authors);
      add(paths::vocabulary);
      add(paths::vectors);
      break;
    case Stage::rdf:
      add(paths::works);
      add(paths::selected_authors);
      add(paths::keyphrases);
      add(paths::vocabulary);
      break;
  }
  return d;
}

std::optional<std::string> Pipeline::staleness(Stage s) const {
  auto it = manifest_.stages.find(s);
  if (it == manifest_.stages.end()) return "has not run";
  const auto& rec = it->second;
  for (const auto& [rel, digest] : rec.outputs) {
    if (!fs::exists(path(rel))) return "output " + rel + " is missing";
    if (sha256_file(path(rel)) != digest) return "output " + rel + " was modified";
  }
  if (rec.params_digest != params_digest(s)) return "configuration changed";
  const auto now = current_inputs(s);
  if (now != rec.inputs) {
    for (const auto& [rel, digest] : now)
      if (auto r = rec.inputs.find(rel); r == rec.inputs.end() || r->second != digest) return "input " + rel + " changed";
    return "an input was removed";
  }
  for (auto u : upstream_of(s))
    if (auto why = staleness(u)) return "upstream stage '" + std::string(to_string(u)) + "' " + *why;
  return std::nullopt;
}

void Pipeline::check_upstream(Stage s) const {
  for (auto u : upstream_of(s)) {
    if (auto why = staleness(u)) {
      throw DependencyError("stage '" + std::string(to_string(s)) + "' needs an up-to-date '" +
                            std::string(to_string(u)) + "' stage, which " + *why + "; run `akg " +
                            std::string(to_string(u)) + "` first");
    }
  }
}

void Pipeline::commit(Stage s, Digests inputs, std::vector<std::string> outputs, std::optional<std::string> skipped) {
  StageRecord rec;
  rec.completed_at = utc_now_iso();
  rec.params_digest = params_digest(s);
  rec.inputs = std::move(inputs);
  for (const auto& rel : outputs) rec.outputs[rel] = sha256_file(path(rel));
  rec.skipped_reason = std::move(skipped);
  manifest_.stages[s] = std::move(rec);
  manifest_.config = to_json(config_);
  write_json(path(paths::manifest), manifest_.to_json());
}

StageOutcome Pipeline::run(Stage s) {
  DirectoryLock lock(data_dir_, true);
  manifest_ = Manifest::load(data_dir_);
  check_upstream(s);
  if (!force_ && !staleness(s)) return {s, false, "up to date"};
  switch (s) {
    case Stage::ingest: return run_ingest();
    case Stage::extract: return run_extract();
    case Stage::eval: return run_eval();
    case Stage::aggregate: return run_aggregate();
    case Stage::vectorize: return run_vectorize();
    case Stage::simgraph: return run_simgraph();
    case Stage::rdf: return run_rdf();
  }
  throw Error(ErrorKind::internal, "unreachable stage");
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  for (auto s : kAllStages) out.push_back(run(s));
  return out;
}

// -- stages ------------------------------------------------------------------

StageOutcome Pipeline::run_ingest() {
  auto inputs = current_inputs(Stage::ingest);
  const auto& cfg = config_.ingest;
  std::vector<ingest::RawWork> raw;
  if (!cfg.fixture_dir.empty()) {
    ingest::FixturePageSource source(cfg.fixture_dir);
    for (auto& page : source.fetch_all(cfg.parallelism))
      for (auto& w : page.works) raw.push_back(std::move(w));
  } else {
    if (cfg.contact_email.empty())
      throw UserError("live harvesting needs ingest.contact_email (or set ingest.fixture_dir for offline mode)");
    ingest::HttpPageSource source(cfg.api_base, cfg.contact_email, cfg.requests_per_second);
    raw = ingest::harvest_all(source, cfg.seed_concept_id);
  }
  auto result = ingest::normalize_all(raw, cfg.seed_concept_id, cfg.min_year, cfg.parallelism);
  const auto selected = ingest::select_top_authors(result.works, cfg.top_n_authors);

  fs::create_directories(path("corpus"));
  write_file_atomic(path(paths::works), ingest::write_corpus_jsonl(result.works));
  write_json(path(paths::harvest_summary), ingest::to_json(result.summary));
  ordered_json sel;
  sel["top_n"] = cfg.top_n_authors;
  sel["authors"] = selected;
  write_json(path(paths::selected_authors), sel);
  commit(Stage::ingest, std::move(inputs), {paths::works, paths::harvest_summary, paths::selected_authors});
  return {Stage::ingest, true,
          "kept " + std::to_string(result.summary.kept) + " of " + std::to_string(result.summary.fetched) +
              " works; " + std::to_string(selected.size()) + " authors selected"};
}

StageOutcome Pipeline::run_extract() {
  auto inputs = current_inputs(Stage::extract);
  const auto selected_list = read_selected(path(paths::selected_authors));
  const std::set<std::string> selected(selected_list.begin(), selected_list.end());
  auto works = selected_works(ingest::read_corpus_jsonl(path(paths::works)), selected);
  std::erase_if(works, [](const ingest::WorkRecord& w) { return w.missing_text(); });

  auto extractor =
      keyphrase::make_extractor(config_.extractor_spec(), make_embedding_provider(config_.keyphrase.embedder));
  std::vector<keyphrase::KeyphraseSet> sets(works.size());
  const std::size_t parallelism = std::max<std::size_t>(1, std::min(config_.ingest.parallelism, works.size()));
  std::vector<std::exception_ptr> errors(parallelism);
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < parallelism; ++t)
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < works.size(); i += parallelism)
          sets[i] = keyphrase::extract_keyphrases(works[i].work_id, works[i].title, works[i].abstract_text, *extractor,
                                                  config_.keyphrase.max_title, config_.keyphrase.max_abstract);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  write_file_atomic(path(paths::keyphrases), keyphrase::write_keyphrases_jsonl(sets));
  commit(Stage::extract, std::move(inputs), {paths::keyphrases});
  return {Stage::extract, true, "extracted keyphrases for " + std::to_string(sets.size()) + " works with " + extractor->name()};
}

StageOutcome Pipeline::run_eval() {
  const auto root = path(paths::eval_dir);
  if (!fs::is_directory(root / "expected")) {
    const std::string reason = "no evaluation sample under " + (root / "expected").string();
    commit(Stage::eval, current_inputs(Stage::eval), {}, reason);
    return {Stage::eval, true, "skipped: " + reason};
  }
  auto inputs = current_inputs(Stage::eval);
  std::vector<std::string> outputs;

  if (fs::is_directory(root / "documents")) {
    auto extractor =
        keyphrase::make_extractor(config_.extractor_spec(), make_embedding_provider(config_.keyphrase.embedder));
    const auto dir = root / "predicted" / model_dir_name(extractor->name());
    fs::create_directories(dir);
    for (const auto& e : fs::directory_iterator(root / "documents")) {
      if (e.path().extension() != ".json") continue;
      const auto doc_id = e.path().stem().string();
      json doc;
      try {
        doc = json::parse(read_file(e.path()));
      } catch (const json::parse_error& err) {
        throw ParseError(e.path().string() + ": " + err.what());
      }
      std::optional<std::string> abstract;
      if (doc.contains("abstract") && doc["abstract"].is_string()) abstract = doc["abstract"].get<std::string>();
      const auto set = keyphrase::extract_keyphrases(doc_id, doc.value("title", std::string()), abstract, *extractor,
                                                     config_.keyphrase.max_title, config_.keyphrase.max_abstract);
      std::vector<keyphrase::Keyphrase> all = set.title_keyphrases;
      all.insert(all.end(), set.abstract_keyphrases.begin(), set.abstract_keyphrases.end());
      std::stable_sort(all.begin(), all.end(),
                       [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
      const auto file = dir / (doc_id + ".json");
      write_file_atomic(file, eval::predicted_json(doc_id, all).dump(2) + "\n");
      outputs.push_back(fs::relative(file, data_dir_).generic_string());
    }
  }

  eval::EvalConfig ec{config_.eval.tau,
                      make_embedding_provider(config_.eval.embedder, config_.eval.embedder_endpoint,
                                              config_.eval.embedder_model)};
  std::map<std::string, eval::EvalReport> reports;
  for (const auto& name : eval::list_extractors(root)) {
    const auto docs = eval::load_sample(root, name);
    auto report = eval::dataset_score(docs, ec);
    const auto file = root / ("report_" + name + ".json");
    write_json(file, eval::to_json(report, name, ec));
    outputs.push_back(fs::relative(file, data_dir_).generic_string());
    reports.emplace(name, std::move(report));
  }
  if (reports.empty()) throw UserError("evaluation sample has no predictions under " + (root / "predicted").string());
  write_file_atomic(path(paths::comparison), eval::comparison_tsv(reports));
  outputs.push_back(paths::comparison);
  std::sort(outputs.begin(), outputs.end());
  commit(Stage::eval, std::move(inputs), std::move(outputs));

  std::string msg = "scored " + std::to_string(reports.size()) + " extractor(s):";
  for (const auto& [name, s] : eval::rank_extractors(reports)) msg += " " + name + "=" + std::to_string(s);
  return {Stage::eval, true, msg};
}

StageOutcome Pipeline::run_aggregate() {
  auto inputs = current_inputs(Stage::aggregate);
  const auto selected_list = read_selected(path(paths::selected_authors));
  const std::set<std::string> selected(selected_list.begin(), selected_list.end());
  const auto works = ingest::read_corpus_jsonl(path(paths::works));
  const auto kps = keyphrase::read_keyphrases_jsonl(path(paths::keyphrases));
  const auto aggregates = aggregate::build_aggregates(works, kps, selected);
  const auto infos = aggregate::build_author_infos(works, selected);
  write_file_atomic(path(paths::aggregates), aggregate::write_aggregates_jsonl(aggregates));
  write_file_atomic(path(paths::authors), aggregate::write_author_infos_jsonl(infos));
  commit(Stage::aggregate, std::move(inputs), {paths::aggregates, paths::authors});
  return {Stage::aggregate, true, "aggregated " + std::to_string(aggregates.size()) + " authors"};
}

StageOutcome Pipeline::run_vectorize() {
  auto inputs = current_inputs(Stage::vectorize);
  const auto aggregates = aggregate::read_aggregates_jsonl(path(paths::aggregates));
  const auto vocab = vectors::build_vocabulary(aggregates, config_.vocab_size);
  const auto vecs = vectors::build_vectors(aggregates, vocab, config_.weights);
  write_json(path(paths::vocabulary), vectors::to_json(vocab, config_.weights));
  write_file_atomic(path(paths::vectors), vectors::write_vectors_jsonl(vecs, config_.weights, vocab.size()));
  commit(Stage::vectorize, std::move(inputs), {paths::vocabulary, paths::vectors});
  return {Stage::vectorize, true,
          std::to_string(vecs.size()) + " vectors over " + std::to_string(vocab.size()) + " descriptors"};
}

StageOutcome Pipeline::run_simgraph() {
  auto inputs = current_inputs(Stage::simgraph);
  simgraph::SimilarityIndex index(vectors::read_vocabulary(path(paths::vocabulary)),
                                  vectors::read_vectors_jsonl(path(paths::vectors)),
                                  aggregate::read_aggregates_jsonl(path(paths::aggregates)),
                                  aggregate::read_author_infos_jsonl(path(paths::authors)));
  const auto& sg = config_.simgraph;
  std::string lines;
  for (const auto& id : index.author_ids()) {
    ordered_json j;
    j["author_id"] = id;
    j["neighbors"] = simgraph::ranked_json(index.primary_connections(id, sg.threshold, sg.max_neighbors),
                                           "author_id", "score");
    lines += j.dump() + "\n";
  }
  write_file_atomic(path(paths::neighbors), lines);
  const auto communities = index.detect_communities(sg.threshold, sg.community_max_iterations);
  ordered_json cj;
  cj["threshold"] = sg.threshold;
  cj["max_iterations"] = sg.community_max_iterations;
  int n = 0;
  for (const auto& [_, c] : communities) n = std::max(n, c + 1);
  cj["n_communities"] = n;
  cj["communities"] = communities;
  write_json(path(paths::communities), cj);
  commit(Stage::simgraph, std::move(inputs), {paths::neighbors, paths::communities});
  return {Stage::simgraph, true, std::to_string(n) + " communities"};
}

StageOutcome Pipeline::run_rdf() {
  auto inputs = current_inputs(Stage::rdf);
  const auto& rc = config_.rdf;
  const auto selected_list = read_selected(path(paths::selected_authors));
  const std::set<std::string> selected(selected_list.begin(), selected_list.end());
  const auto works = selected_works(ingest::read_corpus_jsonl(path(paths::works)), selected);
  const auto kps = keyphrase::read_keyphrases_jsonl(path(paths::keyphrases));
  const auto vocab = vectors::read_vocabulary(path(paths::vocabulary));
  const auto infos = aggregate::build_author_infos(works);

  const auto predicates = rc.predicates_file.empty()
                              ? rdf::PredicateTable::defaults(rc.namespace_iri)
                              : rdf::PredicateTable::from_json(json::parse(read_file(rc.predicates_file)), rc.namespace_iri);

  fs::create_directories(path("export"));
  auto cache = rdf::WikidataCache::load(path(paths::wikidata_cache));
  rdf::WikidataResolver resolver(cache, rc.wikidata_endpoint, rc.allow_network);
  std::size_t unreachable = 0;
  auto resolve = [&](const std::string& name) -> std::optional<rdf::WikidataLink> {
    try {
      return resolver.resolve(name);
    } catch (const RetriableError& e) {
      ++unreachable;
      std::cerr << "akg: rdf: no Wikidata link for '" << name << "': " << e.what() << "\n";
      return std::nullopt;
    }
  };

  rdf::BuildInput in;
  in.works = works;
  std::vector<keyphrase::KeyphraseSet> kept_kps;
  std::set<std::string> work_ids;
  for (const auto& w : works) work_ids.insert(w.work_id);
  for (const auto& k : kps)
    if (work_ids.contains(k.work_id)) kept_kps.push_back(k);
  in.keyphrases = kept_kps;
  in.authors = &infos;
  in.vocabulary = &vocab;
  in.ns = rc.namespace_iri;
  for (const auto& [id, info] : infos)
    if (info.latest_affiliation_name)
      if (auto link = resolve(*info.latest_affiliation_name)) in.affiliation_links.emplace(id, *link);
  std::set<std::string> descriptor_names;
  for (const auto& w : works) {
    auto it = std::find_if(kept_kps.begin(), kept_kps.end(), [&](const auto& k) { return k.work_id == w.work_id; });
    for (auto& d : rdf::work_descriptors(w, it == kept_kps.end() ? nullptr : &*it, vocab)) descriptor_names.insert(d);
  }
  for (const auto& d : descriptor_names)
    if (auto link = resolve(d)) in.descriptor_links.emplace(d, *link);

  const auto graph = rdf::build_triples(in, predicates);
  write_file_atomic(path(paths::ntriples), rdf::to_ntriples(graph));
  write_file_atomic(path(paths::turtle), rdf::to_turtle(graph, predicates));
  write_file_atomic(path(paths::wikidata_cache), cache.dump());
  commit(Stage::rdf, std::move(inputs), {paths::ntriples, paths::turtle, paths::wikidata_cache});
  std::string msg = std::to_string(graph.size()) + " triples; " + std::to_string(in.affiliation_links.size()) +
                    " affiliation and " + std::to_string(in.descriptor_links.size()) + " descriptor links";
  if (unreachable) msg += "; " + std::to_string(unreachable) + " lookups failed";
  return {Stage::rdf, true, msg};
}

}  // namespace akg::pipeline
