#include <doctest.h>

#include <sys/wait.h>

#include <fstream>

#include "akg/pipeline.hpp"
#include "support.hpp"

using namespace akg;
using namespace akg::pipeline;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + testing::cli_path().string() + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const auto c = config_from_json(nlohmann::json::object());
  CHECK(c.eval.tau == 0.6);
  CHECK(c.vocab_size == 1000);
  CHECK(c.weights.w_pt == 2.0);
  CHECK_FALSE(c.rdf.allow_network);
  CHECK(c.keyphrase.kind == "embedding_rank");

  CHECK_THROWS_AS(config_from_json({{"ingest", {{"bogus", 1}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"nosuch", nlohmann::json::object()}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"eval", {{"tau", "high"}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"eval", {{"tau", 1.5}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"ingest", {{"seed_concept_id", "X12"}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"keyphrase", {{"kind", "llm_http"}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"rdf", {{"namespace", "https://example.org/x"}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"service", {{"bind_addr", "localhost"}}}}), UserError);
  CHECK_THROWS_AS(config_from_json({{"simgraph", {{"threshold", -0.1}}}}), UserError);

  const auto round = config_from_json(nlohmann::json::parse(to_json(testing::fixture_config()).dump()));
  CHECK(to_json(round) == to_json(testing::fixture_config()));

  testing::TempDir dir;
  write_file_atomic(dir.path() / "c.json", "{\"simgraph\": {\"threshold\": 0.5}}");
  CHECK(load_config(dir.path() / "c.json").simgraph.threshold == 0.5);
  write_file_atomic(dir.path() / "bad.json", "{");
  CHECK_THROWS_AS(load_config(dir.path() / "bad.json"), UserError);
}

TEST_CASE("stage order and dependencies") {
  CHECK(stage_from_string("vectorize") == Stage::vectorize);
  CHECK(to_string(Stage::rdf) == "rdf");
  CHECK_THROWS_AS(stage_from_string("nope"), UserError);

  testing::TempDir dir;
  Pipeline p(testing::fixture_config(), dir.path() / "data");
  CHECK_THROWS_AS(p.run(Stage::vectorize), DependencyError);
  CHECK_THROWS_AS(p.run(Stage::extract), DependencyError);
}

TEST_CASE("full run, no-op rerun and staleness") {
  testing::TempDir dir;
  const auto data = dir.path() / "data";
  testing::seed_data_dir(data);
  {
    Pipeline p(testing::fixture_config(), data);
    auto outcomes = p.run_all();
    REQUIRE(outcomes.size() == 7);
    for (const auto& o : outcomes) CHECK(o.ran);
  }
  for (const char* rel : {paths::works, paths::harvest_summary, paths::selected_authors, paths::keyphrases,
                          paths::aggregates, paths::authors, paths::vocabulary, paths::vectors, paths::neighbors,
                          paths::communities, paths::comparison, paths::ntriples, paths::turtle, paths::manifest})
    CHECK_MESSAGE(fs::exists(data / rel), rel);

  auto manifest = Manifest::load(data);
  CHECK(manifest.stages.size() == 7);
  CHECK_FALSE(manifest.stages.at(Stage::eval).skipped_reason);
  const auto stamp = manifest.stages.at(Stage::rdf).completed_at;
  const auto nt = read_file(data / paths::ntriples);

  {
    Pipeline p(testing::fixture_config(), data);
    for (const auto& o : p.run_all()) CHECK_FALSE(o.ran);
    for (auto s : kAllStages) CHECK_FALSE(p.staleness(s));
  }
  CHECK(Manifest::load(data).stages.at(Stage::rdf).completed_at == stamp);

  SUBCASE("config change makes a stage stale") {
    auto c = testing::fixture_config();
    c.simgraph.threshold = 0.5;
    Pipeline p(c, data);
    CHECK(p.staleness(Stage::simgraph) == "configuration changed");
    CHECK_FALSE(p.staleness(Stage::vectorize));
    CHECK(p.run(Stage::simgraph).ran);
  }
  SUBCASE("deleted output makes a stage stale") {
    fs::remove(data / paths::ntriples);
    Pipeline p(testing::fixture_config(), data);
    REQUIRE(p.staleness(Stage::rdf));
    CHECK(p.staleness(Stage::rdf)->find("missing") != std::string::npos);
    CHECK(p.run(Stage::rdf).ran);
    CHECK(read_file(data / paths::ntriples) == nt);
  }
  SUBCASE("modified upstream output blocks downstream") {
    std::ofstream(data / paths::aggregates, std::ios::app) << "\n";
    Pipeline p(testing::fixture_config(), data);
    CHECK_THROWS_AS(p.run(Stage::vectorize), DependencyError);
    CHECK(p.run(Stage::aggregate).ran);
    CHECK_FALSE(p.run(Stage::vectorize).ran);
  }
  SUBCASE("forced rerun reproduces outputs") {
    Pipeline p(testing::fixture_config(), data, true);
    p.run_all();
    CHECK(read_file(data / paths::ntriples) == nt);
  }
}

TEST_CASE("eval is skipped without a sample") {
  testing::TempDir dir;
  const auto data = dir.path() / "data";
  Pipeline p(testing::fixture_config(), data);
  p.run(Stage::ingest);
  auto o = p.run(Stage::eval);
  CHECK(o.ran);
  CHECK(o.message.starts_with("skipped"));
  CHECK(Manifest::load(data).stages.at(Stage::eval).skipped_reason);
  CHECK_FALSE(p.run(Stage::eval).ran);
}

TEST_CASE("cli exit codes") {
  testing::TempDir dir;
  const auto data = (dir.path() / "data").string();
  const auto cfg = dir.path() / "config.json";
  write_file_atomic(cfg, testing::fixture_config_json().dump());
  const auto base = "--config \"" + cfg.string() + "\" --data-dir \"" + data + "\" ";
  CHECK(run_cli(base + "vectorize") == 2);
  CHECK(run_cli(base + "ingest") == 0);
  CHECK(run_cli(base + "all") == 0);
  CHECK(run_cli(base + "all") == 0);
  CHECK(run_cli(base + "frobnicate") == 1);

  const auto bad = dir.path() / "bad.json";
  write_file_atomic(bad, R"({"simgraph": {"threshold": 7}})");
  CHECK(run_cli("--config \"" + bad.string() + "\" --data-dir \"" + data + "\" ingest") == 1);
  CHECK(run_cli("--data-dir \"" + (dir.path() / "empty").string() + "\" serve") == 1);
}
