#include <doctest.h>

#include "akg/rdf.hpp"
#include "fixture_corpus.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace akg;
using namespace akg::rdf;

namespace {

const std::string kNs = "https://example.org/akg/";

std::size_t count_predicate(const TripleGraph& g, const std::string& iri) {
  return static_cast<std::size_t>(
      std::count_if(g.triples.begin(), g.triples.end(), [&](const Triple& t) { return t.predicate == iri; }));
}

}  // namespace

TEST_CASE("URI minting") {
  CHECK(mint_uri(EntityKind::author, "A5002212606", "https://example.org/kg/") ==
        "https://example.org/kg/author/A5002212606");
  CHECK(mint_uri(EntityKind::descriptor, "solid electrolyte", kNs) == kNs + "descriptor/solid%20electrolyte");
  CHECK(mint_uri(EntityKind::work, "W1", kNs) == kNs + "work/W1");
  CHECK(mint_uri(EntityKind::descriptor, "a/b", kNs) != mint_uri(EntityKind::descriptor, "a b", kNs));
  CHECK(mint_uri(EntityKind::descriptor, "li-ion", kNs) != mint_uri(EntityKind::descriptor, "li ion", kNs));
  CHECK(percent_encode("é") == "%C3%A9");
  CHECK_THROWS_AS(mint_uri(EntityKind::work, "W1", "https://example.org/akg"), UserError);
}

TEST_CASE("N-Triples lines") {
  Triple t{"http://e/s", "http://e/p", Term::literal("o")};
  CHECK(ntriples_line(t) == "<http://e/s> <http://e/p> \"o\" .");
  t.object = Term::literal("two\nlines \"quoted\" \\");
  CHECK(ntriples_line(t) == "<http://e/s> <http://e/p> \"two\\nlines \\\"quoted\\\" \\\\\" .");
  t.object = Term::literal("2015-01-01", std::string(kXsd) + "date");
  CHECK(ntriples_line(t) == "<http://e/s> <http://e/p> \"2015-01-01\"^^<http://www.w3.org/2001/XMLSchema#date> .");
  t.object = Term::iri("http://e/o");
  CHECK(ntriples_line(t) == "<http://e/s> <http://e/p> <http://e/o> .");
  t.object = Term::iri("http://e/has space");
  CHECK_THROWS_AS(ntriples_line(t), Error);
  t.object = Term::literal("\xff");
  try {
    ntriples_line(t);
    FAIL("expected an encoding error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::internal);
    CHECK(std::string(e.what()).find("http://e/s") != std::string::npos);
  }
}

TEST_CASE("single work graph") {
  using ingest::AuthorPosition;
  auto w = testing::work("W1", 2015,
                         {testing::author("A1", AuthorPosition::first, "Ana", "Fixture Institute"),
                          testing::author("A2", AuthorPosition::last, "Bo", "Nowhere College")},
                         {{"C1", "Anode", 1, 0.5}, {"C2", "Cathode", 1, 0.5}});
  w.publisher_name = "Elsevier";
  std::vector<ingest::WorkRecord> works{w};
  std::vector<keyphrase::KeyphraseSet> kps{{"W1", {testing::kp("solid electrolyte", 0.9)}, {testing::kp("ignored", 0.1)}}};
  auto infos = aggregate::build_author_infos(works);
  vectors::DescriptorVocabulary vocab(
      {{"anode", vectors::Origin::concept_tag, 1}, {"solid electrolyte", vectors::Origin::keyphrase, 1}});
  auto cache = WikidataCache::load(testing::fixture_dir() / "wikidata_cache.json");

  BuildInput in;
  in.works = works;
  in.keyphrases = kps;
  in.authors = &infos;
  in.vocabulary = &vocab;
  in.ns = kNs;
  in.affiliation_links["A1"] = *cache.find("Fixture Institute");
  const auto p = PredicateTable::defaults(kNs);
  auto g = build_triples(in, p);
  CHECK(count_predicate(g, p.at("creator")) == 2);
  CHECK(count_predicate(g, p.at("subject")) == 3);
  CHECK(count_predicate(g, p.at("publisher")) == 1);
  CHECK(count_predicate(g, p.at("affiliation_name")) == 2);
  CHECK(count_predicate(g, p.at("affiliation_wikidata")) == 1);
  CHECK(g.triples.contains(Triple{kNs + "author/A1", p.at("affiliation_wikidata"), Term::iri("http://www.wikidata.org/entity/Q1")}));
  CHECK(g.triples.contains(Triple{kNs + "work/W1", p.at("publisher"), Term::literal("Elsevier")}));

  BuildInput empty;
  empty.authors = &infos;
  empty.vocabulary = &vocab;
  empty.ns = kNs;
  CHECK(build_triples(empty, p).size() == 0);

  std::vector<keyphrase::KeyphraseSet> dangling{{"W9", {}, {}}};
  in.keyphrases = dangling;
  CHECK_THROWS_AS(build_triples(in, p), ConsistencyError);
}

TEST_CASE("fixture graph counts, determinism and round-trip") {
  const auto corpus = testing::fixture_corpus();
  const auto cache = WikidataCache::load(testing::fixture_dir() / "wikidata_cache.json");
  const auto in = testing::rdf_input(corpus, cache);
  const auto p = PredicateTable::defaults(kNs);
  const auto g = build_triples(in, p);
  CHECK(g.size() == gen::closed_form_count(corpus, in));
  CHECK(!in.affiliation_links.empty());
  CHECK(count_predicate(g, p.at("affiliation_wikidata")) == in.affiliation_links.size());

  const auto nt = to_ntriples(g);
  CHECK(nt == to_ntriples(build_triples(testing::rdf_input(corpus, cache), p)));
  CHECK(static_cast<std::size_t>(std::count(nt.begin(), nt.end(), '\n')) == g.size());
  CHECK(to_turtle(g, p) == to_turtle(g, p));

  testing::TempDir dir;
  CHECK(testing::rdflib_roundtrip(g, p, dir.path()) == 0);
}

TEST_CASE("predicate table") {
  auto p = PredicateTable::defaults(kNs);
  CHECK(p.at("affiliation_name") == kNs + "vocab/affiliationName");
  CHECK(p.prefixes.at("kgv") == kNs + "vocab/");
  CHECK_THROWS_AS(PredicateTable::from_json(nlohmann::json{{"prefixes", nlohmann::json::object()}, {"predicates", {{"type", "x"}}}}, kNs), Error);
}

TEST_CASE("wikidata cache") {
  auto cache = WikidataCache::load(testing::fixture_dir() / "wikidata_cache.json");
  auto hit = cache.find("Fixture   INSTITUTE");
  REQUIRE(hit);
  CHECK(hit->qid == "Q1");
  CHECK(hit->source == WikidataLink::Source::cache);
  CHECK_FALSE(cache.find("Unknown Institution"));
  CHECK_FALSE(cache.insert({"fixture institute", "Q2", "", WikidataLink::Source::live}));
  CHECK(cache.find("fixture institute")->qid == "Q1");
  CHECK_THROWS_AS(cache.insert({"x", "nope", "", WikidataLink::Source::live}), UserError);

  testing::TempDir dir;
  write_file_atomic(dir.path() / "c.json", cache.dump());
  CHECK(WikidataCache::load(dir.path() / "c.json").dump() == cache.dump());
  CHECK(WikidataCache::load(dir.path() / "missing.json").size() == 0);
  CHECK(is_qid("Q42"));
  CHECK_FALSE(is_qid("Q"));
  CHECK_FALSE(is_qid("P31"));
}

TEST_CASE("QID selection") {
  nlohmann::json r = {{"search",
                       {{{"id", "Q10"}, {"label", "Acme University"}},
                        {{"id", "Q11"}, {"label", "acme university"}},
                        {{"id", "Q12"}, {"label", "Other"}, {"aliases", {"Acme U"}}}}}};
  CHECK(select_qid(r, "Acme University") == "Q10");
  CHECK(select_qid(r, "ACME UNIVERSITY") == std::nullopt);
  CHECK(select_qid(r, "acme u") == "Q12");
  CHECK(select_qid(r, "nothing") == std::nullopt);
}

TEST_CASE("resolver") {
  SUBCASE("offline miss is unresolved") {
    WikidataCache cache;
    WikidataResolver resolver(cache, "http://127.0.0.1:1/w/api.php", false);
    CHECK_FALSE(resolver.resolve("Somewhere"));
  }
  SUBCASE("live lookup is recorded in the cache") {
    int calls = 0;
    testing::LocalServer server([&](httplib::Server& s) {
      s.Get("/w/api.php", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        CHECK(req.get_param_value("action") == "wbsearchentities");
        CHECK(req.get_param_value("search") == "Test Institute");
        res.set_content(R"({"search": [{"id": "Q777", "label": "Test Institute"}]})", "application/json");
      });
    });
    WikidataCache cache;
    WikidataResolver resolver(cache, server.url() + "/w/api.php", true);
    auto link = resolver.resolve("Test Institute");
    REQUIRE(link);
    CHECK(link->qid == "Q777");
    CHECK(link->source == WikidataLink::Source::live);
    CHECK(cache.find("test institute")->qid == "Q777");
    CHECK(resolver.resolve("Test Institute")->source == WikidataLink::Source::cache);
    CHECK(calls == 1);
  }
  SUBCASE("unreachable endpoint is retriable") {
    WikidataCache cache;
    WikidataResolver resolver(cache, "http://127.0.0.1:1/w/api.php", true);
    CHECK_THROWS_AS(resolver.resolve("Somewhere"), RetriableError);
  }
}
