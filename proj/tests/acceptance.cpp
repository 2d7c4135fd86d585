#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "akg/eval.hpp"
#include "akg/pipeline.hpp"
#include "akg/rdf.hpp"
#include "akg/service.hpp"
#include "fixture_corpus.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "service_fixture.hpp"
#include "support.hpp"

using namespace akg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++n_failed;
  }
  std::size_t n_failed = 0;
};

struct Criterion {
  std::string name;
  std::string tolerance;
  std::function<void(Check&)> run;
};

// 1. Streaming scores against the naive double loop.
void eval_oracle(Check& c) {
  const double tol = 1e-12;
  const auto t0 = Clock::now();
  const auto docs = gen::synthetic_docs(42, 40);
  const eval::EvalConfig config{0.6, std::make_shared<HashEmbedding>()};
  const auto report = eval::dataset_score(docs, config);
  std::size_t compared = 0;
  double worst = 0.0;
  for (const auto& d : docs) {
    const auto got = eval::document_score(d, config);
    const auto want = oracle::document_score(d, config.tau, *config.embedder);
    c.expect(got.has_value() == want.has_value(), d.doc_id + ": skip status differs");
    if (!got || !want) continue;
    ++compared;
    const double diff = std::abs(*got - static_cast<double>(*want));
    worst = std::max(worst, diff);
    c.expect(diff <= tol, d.doc_id + ": |diff| = " + std::to_string(diff));
  }
  const auto want = oracle::dataset_score(docs, config.tau, *config.embedder);
  c.expect(want.has_value(), "oracle scored no document");
  if (want) {
    const double diff = std::abs(report.dataset_score - static_cast<double>(*want));
    worst = std::max(worst, diff);
    c.expect(diff <= tol, "dataset |diff| = " + std::to_string(diff));
  }
  const double elapsed = seconds_since(t0);
  c.expect(compared >= 20, "only " + std::to_string(compared) + " scored documents");
  c.expect(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
  c.detail << compared << " scored docs, max |diff| " << worst << ", " << elapsed << " s";
}

// 2. Strict threshold and monotone sweep.
void eval_boundary(Check& c) {
  const eval::EvalConfig table{0.6, std::make_shared<gen::TableEmbedding>(std::map<std::string, std::vector<double>>{
                                        {"e", {5, 0}}, {"p", {3, 4}}, {"q", {-3, 4}}})};
  c.expect(cosine(table.embedder->embed("e"), table.embedder->embed("p")) == 0.6, "fixture cosine is not 0.6");
  c.expect(eval::thresholded_similarity("e", "p", table) == 0.0, "phi at cos = tau is not 0");
  const std::vector<double> taus{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (double tau : taus) {
    c.expect(eval::threshold_cosine(tau, tau) == 0.0, "phi(tau, tau) != 0");
    for (double neg : {-1.0, -0.5, -1e-9}) c.expect(eval::threshold_cosine(neg, tau) == 0.0, "negative cosine kept");
    auto cfg = table;
    cfg.tau = tau;
    c.expect(eval::thresholded_similarity("e", "q", cfg) == 0.0, "negative fixture cosine kept");
  }

  const auto docs = gen::synthetic_docs(7, 40);
  std::size_t sweeps = 0;
  for (const auto& d : docs) {
    std::optional<double> prev;
    for (double tau : taus) {
      const auto s = eval::document_score(d, {tau, std::make_shared<HashEmbedding>()});
      if (!s) break;
      if (prev) c.expect(*s <= *prev, d.doc_id + ": score rose at tau " + std::to_string(tau));
      prev = s;
    }
    if (prev) ++sweeps;
  }
  c.detail << "cos = tau gives 0, negatives give 0, " << sweeps << " docs swept over 6 tau values";
}

// 3. Hand example, linearity and homogeneity.
void vector_formula(Check& c) {
  const double tol = 1e-9;
  const auto agg = gen::hand_example();
  const auto vocab1 = vectors::build_vocabulary({{"A1", agg}});
  const auto v = vectors::author_vector(agg, vocab1, vectors::WeightConfig{});
  const double e = v.components.coeff(*vocab1.find("electrolyte"));
  const double s = v.components.coeff(*vocab1.find("solid electrolyte"));
  c.expect(e == 1.8, "electrolyte component " + std::to_string(e));
  c.expect(s == 4.0, "solid electrolyte component " + std::to_string(s));

  std::mt19937_64 rng(2024);
  aggregate::AggregateMap aggs;
  for (int i = 0; i < 100; ++i) aggs["A" + std::to_string(i)] = gen::random_aggregate(rng, "A" + std::to_string(i), 60);
  const auto vocab = vectors::build_vocabulary(aggs, 40);
  const vectors::WeightConfig w{{0.3, 0.7, 1.1}, 2.5, 0.5, 1.5, 0.75, 3.0};
  double worst = 0.0;
  for (const auto& [id, a] : aggs) {
    const auto got = vectors::author_vector(a, vocab, w);
    for (const auto& [name, value] : gen::naive_vector(a, vocab, w)) {
      const double diff = std::abs(got.components.coeff(*vocab.find(name)) - static_cast<double>(value));
      worst = std::max(worst, diff);
      c.expect(diff <= tol, id + "/" + name + " differs from direct evaluation");
    }
  }
  std::vector<std::string> ids;
  for (const auto& [id, _] : aggs) ids.push_back(id);
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    auto merged = aggs.at(ids[i]);
    merged.merge(aggs.at(ids[i + 1]));
    const SparseVector<double> sum =
        vectors::author_vector(aggs.at(ids[i]), vocab, w).components + vectors::author_vector(aggs.at(ids[i + 1]), vocab, w).components;
    const double diff = gen::max_abs_diff(vectors::author_vector(merged, vocab, w).components, sum);
    worst = std::max(worst, diff);
    c.expect(diff <= tol, "linearity fails for " + ids[i] + " + " + ids[i + 1]);
  }
  for (double lambda : {0.5, 2.0, 3.7}) {
    auto scaled = w;
    for (auto& f : scaled.period_factors) f *= lambda;
    for (const auto& [id, a] : aggs) {
      const SparseVector<double> want = lambda * vectors::author_vector(a, vocab, w).components;
      const double diff = gen::max_abs_diff(vectors::author_vector(a, vocab, scaled).components, want);
      worst = std::max(worst, diff);
      c.expect(diff <= tol, "homogeneity fails for " + id);
    }
  }
  c.detail << "hand example " << e << " and " << s << ", 100 aggregates, max |diff| " << worst;
}

// 4. Filter invariants over fuzzed raw works.
void filtering(Check& c) {
  const auto raw = gen::fuzz_raw_works(1234, 200);
  const auto result = ingest::normalize_all(raw, ingest::kBatterySeedConcept, 1990, 4);
  std::size_t violations = 0;
  for (const auto& w : result.works) {
    const auto& d = w.publication_date;
    const bool date_ok = d.size() == 10 && d[4] == '-' && d[7] == '-' && w.publication_year >= 1990 &&
                         d.substr(0, 4) == std::to_string(w.publication_year);
    bool concepts_ok = true;
    for (const auto& con : w.concepts)
      concepts_ok = concepts_ok && con.concept_id != "C555008776" && con.score > 0.0;
    if (!date_ok || !concepts_ok) ++violations;
    c.expect(date_ok, w.work_id + " violates the date filter");
    c.expect(concepts_ok, w.work_id + " keeps a seed or zero-score concept");
  }
  c.expect(result.summary.fetched == 200, "fetched count");
  c.expect(result.summary.kept + result.summary.rejected_no_date + result.summary.rejected_pre1990 == 200,
           "summary does not account for every record");
  c.detail << raw.size() << " records, " << result.works.size() << " kept, " << violations << " violations";
}

// 5. Vocabulary cut on 1500 distinct descriptors.
void vocabulary(Check& c) {
  std::mt19937_64 rng(8);
  aggregate::AggregateMap aggs;
  std::map<std::string, std::int64_t> totals;
  for (int d = 0; d < 1500; ++d) {
    const std::string name = "grade " + std::to_string(d) + " electrode";
    const int freq = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < freq; ++i) {
      auto& role = aggs["A" + std::to_string(rng() % 30)].periods[aggregate::kPeriods[rng() % 3]].first_author;
      // Concept tags and keyphrases under surface variants of the same name.
      if (rng() % 2)
        role.concepts[name].add(0.5);
      else
        role.keyphrases[rng() % 2 ? "Grade " + std::to_string(d) + " Electrode" : "grade " + std::to_string(d) + " electrodes"]
            .add(0.5);
    }
    totals[name] = freq;
  }
  for (auto& [id, a] : aggs) a.author_id = id;
  const auto vocab = vectors::build_vocabulary(aggs, 1000);
  c.expect(vocab.size() == 1000, "size " + std::to_string(vocab.size()));

  std::vector<std::pair<std::string, std::int64_t>> want(totals.begin(), totals.end());
  std::sort(want.begin(), want.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  want.resize(1000);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(vocab.size(), 1000); ++i) {
    const auto& [name, freq] = want[static_cast<std::size_t>(i)];
    c.expect(vocab.at(i).name == name, "position " + std::to_string(i) + " holds " + vocab.at(i).name);
    c.expect(vocab.at(i).corpus_frequency == freq, name + " frequency " + std::to_string(vocab.at(i).corpus_frequency));
  }
  c.detail << "1500 -> " << vocab.size() << " entries, merged sums and order checked";
}

// 6. Split, aggregate, merge.
void monoid(Check& c) {
  std::size_t comparisons = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto corpus = testing::random_corpus(seed, 50);
    const auto whole = aggregate::build_aggregates(corpus.works, corpus.keyphrases, corpus.authors);
    for (std::size_t shards : {2u, 3u, 7u, 50u}) {
      c.expect(gen::shard_and_merge(corpus, shards, seed * 31 + shards) == whole,
               "seed " + std::to_string(seed) + ", " + std::to_string(shards) + " shards");
      ++comparisons;
    }
  }

  const auto fixture = testing::fixture_corpus();
  testing::RandomCorpus aligned;
  aligned.works = fixture.works;
  aligned.authors = fixture.authors;
  std::map<std::string, keyphrase::KeyphraseSet> by_work;
  for (const auto& k : fixture.keyphrases) by_work[k.work_id] = k;
  for (const auto& w : fixture.works) {
    auto it = by_work.find(w.work_id);
    aligned.keyphrases.push_back(it != by_work.end() ? it->second : keyphrase::KeyphraseSet{w.work_id, {}, {}});
  }
  c.expect(fixture.works.size() == 50, "fixture has " + std::to_string(fixture.works.size()) + " works");
  for (std::size_t shards : {2u, 5u, 50u}) {
    c.expect(gen::shard_and_merge(aligned, shards, shards) == fixture.aggregates,
             "fixture corpus, " + std::to_string(shards) + " shards");
    ++comparisons;
  }

  const auto text = aggregate::write_aggregates_jsonl(fixture.aggregates);
  std::size_t fields = 0;
  for (const char* field : {"\"nb_publications\"", "\"nb_publications_first_author\"",
                            "\"nb_publications_non_first_author\"", "\"first_author\"", "\"non_first_author\"",
                            "\"concepts\"", "\"keyphrases\"", "\"co_authors\"", "\"freq\"",
                            "\"avg_confidence_score\"", "\"1990-2000\"", "\"2001-2010\"", "\"2011-2023\""}) {
    c.expect(text.find(field) != std::string::npos, std::string("missing field ") + field);
    ++fields;
  }
  c.detail << comparisons << " sharded merges equal whole-corpus aggregation, " << fields << " field names present";
}

// 7. Top-k against the exhaustive scan.
void similarity(Check& c) {
  const double tol = 1e-12;
  const auto index = gen::make_index(gen::random_spec(99, 100, 24), 24);
  std::size_t queries = 0;
  for (const auto& id : index.author_ids())
    for (std::size_t k = 1; k <= 10; ++k) {
      const auto got = index.top_k_similar(id, k);
      const auto want = oracle::top_k(index.vectors(), id, k);
      ++queries;
      c.expect(got.size() == want.size(), id + " k=" + std::to_string(k) + " size");
      for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
        c.expect(got[i].first == want[i].first, id + " k=" + std::to_string(k) + " rank " + std::to_string(i));
        c.expect(std::abs(got[i].second - static_cast<double>(want[i].second)) <= tol, id + " score");
      }
    }

  std::mt19937_64 rng(5);
  std::size_t vectors_checked = 0;
  for (int t = 0; t < 200; ++t) {
    SparseVector<double> x(50), y(50);
    for (int i = 0; i < 10; ++i) {
      x.coeffRef(static_cast<int>(rng() % 50)) = static_cast<double>(1 + rng() % 100000) / 997.0;
      y.coeffRef(static_cast<int>(rng() % 50)) = static_cast<double>(1 + rng() % 100000) / 997.0;
    }
    c.expect(cosine(x, x) == 1.0, "self-similarity is not 1");
    for (double lambda : {1e-3, 0.5, 3.75, 1e4}) {
      const SparseVector<double> scaled = lambda * x;
      c.expect(std::abs(cosine(x, scaled) - 1.0) <= 1e-15, "scaled self-similarity");
      c.expect(std::abs(cosine(scaled, y) - cosine(x, y)) <= 1e-15, "scale changes cosine");
    }
    ++vectors_checked;
  }
  c.detail << queries << " top-k queries on 100 authors, " << vectors_checked << " vectors for self and scale checks";
}

// 8. RDF round-trip and counts.
void rdf_export(Check& c) {
  const std::string ns = "https://example.org/akg/";
  const auto corpus = testing::fixture_corpus();
  const auto cache = rdf::WikidataCache::load(testing::fixture_dir() / "wikidata_cache.json");
  const auto in = testing::rdf_input(corpus, cache, ns);
  const auto predicates = rdf::PredicateTable::defaults(ns);
  const auto g = rdf::build_triples(in, predicates);
  const auto expected = gen::closed_form_count(corpus, in);
  c.expect(g.size() == expected, "graph has " + std::to_string(g.size()) + " triples, formula gives " +
                                     std::to_string(expected));
  const auto nt = rdf::to_ntriples(g);
  const auto again = rdf::to_ntriples(rdf::build_triples(testing::rdf_input(corpus, cache, ns), predicates));
  c.expect(nt == again, "N-Triples differ across runs");
  testing::TempDir dir;
  c.expect(testing::rdflib_roundtrip(g, predicates, dir.path()) == 0, "rdflib round-trip mismatch");
  c.detail << g.size() << " triples, closed form " << expected << ", rdflib nt and ttl identical";
}

// 9. `akg all` on the offline fixture.
void end_to_end(Check& c) {
  testing::TempDir dir;
  const auto data = dir.path() / "data";
  testing::seed_data_dir(data);
  const auto cfg = dir.path() / "config.json";
  write_file_atomic(cfg, testing::fixture_config_json().dump());
  const auto cmd = "\"" + testing::cli_path().string() + "\" --config \"" + cfg.string() + "\" --data-dir \"" +
                   data.string() + "\" all >/dev/null 2>&1";
  const auto t0 = Clock::now();
  const int status = std::system(cmd.c_str());
  const double elapsed = seconds_since(t0);
  c.expect(WIFEXITED(status) && WEXITSTATUS(status) == 0, "akg all failed");
  c.expect(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");

  namespace p = pipeline::paths;
  std::size_t artifacts = 0;
  for (const char* rel : {p::works, p::harvest_summary, p::selected_authors, p::keyphrases, p::aggregates, p::authors,
                          p::vocabulary, p::vectors, p::neighbors, p::communities, p::comparison, p::ntriples,
                          p::turtle, p::wikidata_cache, p::manifest}) {
    c.expect(fs::exists(data / rel), std::string("missing ") + rel);
    ++artifacts;
  }
  const auto manifest = pipeline::Manifest::load(data);
  for (auto s : pipeline::kAllStages) {
    auto it = manifest.stages.find(s);
    c.expect(it != manifest.stages.end() && !it->second.completed_at.empty(),
             "manifest lacks stage " + std::string(pipeline::to_string(s)));
  }
  const auto before = read_file(data / p::manifest);
  const auto t1 = Clock::now();
  const int rerun = std::system(cmd.c_str());
  const double rerun_elapsed = seconds_since(t1);
  c.expect(WIFEXITED(rerun) && WEXITSTATUS(rerun) == 0, "rerun failed");
  c.expect(read_file(data / p::manifest) == before, "rerun changed the manifest");
  pipeline::Pipeline check(testing::fixture_config(), data);
  for (auto s : pipeline::kAllStages)
    c.expect(!check.staleness(s), "stage " + std::string(pipeline::to_string(s)) + " stale after rerun");
  c.detail << "all in " << elapsed << " s, " << artifacts << " artifacts, " << manifest.stages.size()
           << " stages recorded, rerun " << rerun_elapsed << " s with manifest unchanged";
}

// 10. Byte-identical API bodies and ego oracle.
void api_determinism(Check& c) {
  testing::BuiltDataDir built;
  const auto first = testing::make_api(built.data);
  const auto second = testing::make_api(built.data);
  const auto index = service::load_index(built.data);
  std::size_t requests = 0;
  for (const auto& req : testing::endpoint_requests(*index)) {
    const auto a = first->handle(req.path, req.params);
    const auto b = second->handle(req.path, req.params);
    c.expect(a.status == 200, req.path + " returned " + std::to_string(a.status));
    c.expect(a.status == b.status && a.body == b.body, req.path + " differs across runs");
    ++requests;
  }

  const auto cfg = testing::fixture_config().simgraph;
  const auto aggs = aggregate::read_aggregates_jsonl(built.data / pipeline::paths::aggregates);
  std::size_t egos = 0;
  for (const auto& id : index->author_ids()) {
    const auto r = first->handle("/api/authors/" + id + "/ego", {});
    c.expect(r.body == second->handle("/api/authors/" + id + "/ego", {}).body, id + " ego differs across runs");
    const auto want = oracle::ego(index->vectors(), aggs, id, cfg.threshold, cfg.max_neighbors);
    const auto j = nlohmann::json::parse(r.body);
    std::set<std::string> nodes;
    std::set<std::pair<std::string, std::string>> primary, secondary;
    for (const auto& n : j["nodes"]) nodes.insert(n["author_id"].get<std::string>());
    for (const auto& e : j["edges"])
      (e["kind"] == "primary" ? primary : secondary)
          .emplace(e["author_a"].get<std::string>(), e["author_b"].get<std::string>());
    c.expect(nodes == want.nodes && primary == want.primary && secondary == want.secondary,
             id + " ego differs from the oracle");
    ++egos;
  }
  c.detail << requests << " endpoint requests identical, " << egos << " ego graphs match the oracle";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"eval-oracle", "abs 1e-12, >= 20 docs, < 5 s", eval_oracle},
      {"eval-boundary", "exact", eval_boundary},
      {"vector-formula", "hand example exact, abs 1e-9", vector_formula},
      {"ingest-filtering", "zero violations", filtering},
      {"vocabulary-cut", "exact", vocabulary},
      {"aggregation-monoid", "bit-for-bit", monoid},
      {"similarity-topk", "abs 1e-12, scale abs 1e-15", similarity},
      {"rdf-roundtrip", "exact triple sets, byte-identical", rdf_export},
      {"pipeline-end-to-end", "< 60 s", end_to_end},
      {"api-determinism", "byte-identical", api_determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = check.n_failed == 0;
    failed += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << cr.name << " [" << cr.tolerance << "] " << check.detail.str() << "\n";
    for (const auto& f : check.failures) std::cout << "    " << f << "\n";
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
