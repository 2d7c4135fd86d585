#include <doctest.h>

#include <random>

#include "akg/aggregate.hpp"
#include "akg/vectors.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace akg;
using namespace akg::vectors;
using akg::aggregate::Period;

using gen::hand_example;
using gen::max_abs_diff;
using gen::naive_vector;
using gen::random_aggregate;

TEST_CASE("hand example yields 1.8 and 4.0") {
  const auto agg = hand_example();
  aggregate::AggregateMap aggs{{"A1", agg}};
  auto vocab = build_vocabulary(aggs);
  auto v = author_vector(agg, vocab, WeightConfig{});
  CHECK(v.components.coeff(*vocab.find("electrolyte")) == 1.8);
  CHECK(v.components.coeff(*vocab.find("solid electrolyte")) == 4.0);
  CHECK(v.components.nonZeros() == 2);
}

TEST_CASE("role descriptor components") {
  aggregate::RoleBucket r;
  for (int i = 0; i < 123; ++i) r.concepts["anode"].add(0.8);
  r.keyphrases["cathode"].freq = 3;
  r.keyphrases["cathode"].freq_abstract = 3;
  r.concepts["outside"].add(0.5);
  DescriptorVocabulary vocab({{"anode", Origin::concept_tag, 1}, {"cathode", Origin::keyphrase, 1}});
  auto d = role_descriptor_vector(r, vocab, WeightConfig{});
  CHECK(d.coeff(0) == doctest::Approx(98.4).epsilon(1e-14));
  CHECK(d.coeff(1) == 3.0);
  CHECK(d.nonZeros() == 2);
}

TEST_CASE("empty aggregate is the zero vector") {
  DescriptorVocabulary vocab({{"x", Origin::concept_tag, 1}});
  aggregate::AuthorAggregate empty;
  CHECK(author_vector(empty, vocab, WeightConfig{}).components.nonZeros() == 0);
}

TEST_CASE("moving a period scales by the factor ratio") {
  auto p2 = hand_example();
  auto p0 = p2;
  p0.periods = {{Period::p1990_2000, p2.periods.at(Period::p2011_2023)}};
  aggregate::AggregateMap aggs{{"A1", p2}};
  auto vocab = build_vocabulary(aggs);
  WeightConfig w;
  auto v2 = author_vector(p2, vocab, w).components;
  auto v0 = author_vector(p0, vocab, w).components;
  const double ratio = w.period_factors[0] / w.period_factors[2];
  CHECK(max_abs_diff(v0, ratio * v2) == 0.0);
}

TEST_CASE("vectors match direct evaluation, linearity and homogeneity") {
  std::mt19937_64 rng(2024);
  aggregate::AggregateMap aggs;
  for (int i = 0; i < 100; ++i) aggs["A" + std::to_string(i)] = random_aggregate(rng, "A" + std::to_string(i), 60);
  auto vocab = build_vocabulary(aggs, 40);
  WeightConfig w{{0.3, 0.7, 1.1}, 2.5, 0.5, 1.5, 0.75, 3.0};

  for (const auto& [id, agg] : aggs) {
    auto v = author_vector(agg, vocab, w);
    auto expected = naive_vector(agg, vocab, w);
    for (const auto& [name, value] : expected)
      CHECK(std::abs(v.components.coeff(*vocab.find(name)) - static_cast<double>(value)) <= 1e-9);
  }

  auto ids = std::vector<std::string>();
  for (const auto& [id, _] : aggs) ids.push_back(id);
  for (std::size_t i = 0; i + 1 < ids.size(); i += 2) {
    auto a = aggs.at(ids[i]), b = aggs.at(ids[i + 1]);
    auto merged = a;
    merged.merge(b);
    auto sum = SparseVector<double>(author_vector(a, vocab, w).components + author_vector(b, vocab, w).components);
    CHECK(max_abs_diff(author_vector(merged, vocab, w).components, sum) <= 1e-9);
  }

  for (double lambda : {0.5, 2.0, 3.7}) {
    WeightConfig scaled = w;
    for (auto& f : scaled.period_factors) f *= lambda;
    for (const auto& [id, agg] : aggs) {
      auto v = author_vector(agg, vocab, w).components;
      CHECK(max_abs_diff(author_vector(agg, vocab, scaled).components, lambda * v) <= 1e-9);
    }
  }
}

TEST_CASE("vocabulary merges by normalized name") {
  aggregate::AuthorAggregate a;
  a.author_id = "A1";
  auto& b = a.periods[Period::p2001_2010];
  for (int i = 0; i < 10; ++i) b.first_author.concepts["Anode"].add(0.5);
  for (int i = 0; i < 5; ++i) b.non_first_author.keyphrases["anodes"].add(0.5);
  auto vocab = build_vocabulary({{"A1", a}});
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.at(0) == VocabEntry{"anode", Origin::both, 15});
}

TEST_CASE("vocabulary cut keeps the most frequent, ties by name") {
  std::mt19937_64 rng(8);
  aggregate::AggregateMap aggs;
  std::map<std::string, std::int64_t> totals;
  for (int d = 0; d < 1500; ++d) {
    const std::string name = "descriptor " + std::to_string(d);
    const int freq = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < freq; ++i) {
      auto& agg = aggs["A" + std::to_string(rng() % 30)];
      auto& role = agg.periods[aggregate::kPeriods[rng() % 3]].first_author;
      if (rng() % 2)
        role.concepts[name].add(0.5);
      else
        role.keyphrases[name].add(0.5);
    }
    totals[name] = freq;
  }
  for (auto& [id, agg] : aggs) agg.author_id = id;
  auto vocab = build_vocabulary(aggs, 1000);
  CHECK(vocab.size() == 1000);

  std::vector<std::pair<std::string, std::int64_t>> oracle(totals.begin(), totals.end());
  std::sort(oracle.begin(), oracle.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  oracle.resize(1000);
  for (Eigen::Index i = 0; i < vocab.size(); ++i) {
    CHECK(vocab.at(i).name == oracle[static_cast<std::size_t>(i)].first);
    CHECK(vocab.at(i).corpus_frequency == oracle[static_cast<std::size_t>(i)].second);
  }
}

TEST_CASE("equal frequency at the cut keeps the smaller name") {
  aggregate::AuthorAggregate a;
  a.author_id = "A1";
  auto& role = a.periods[Period::p2011_2023].first_author;
  role.concepts["zeta"].add(0.5);
  role.concepts["alpha"].add(0.5);
  role.concepts["top"].add(0.5);
  role.concepts["top"].add(0.5);
  auto vocab = build_vocabulary({{"A1", a}}, 2);
  CHECK(vocab.at(0).name == "top");
  CHECK(vocab.at(1).name == "alpha");
}

TEST_CASE("vocabulary and vectors round-trip through files") {
  std::mt19937_64 rng(3);
  aggregate::AggregateMap aggs;
  for (int i = 0; i < 10; ++i) aggs["A" + std::to_string(i)] = random_aggregate(rng, "A" + std::to_string(i), 20);
  auto vocab = build_vocabulary(aggs);
  WeightConfig w;
  w.w_pt = 3.0;
  auto vecs = build_vectors(aggs, vocab, w);
  testing::TempDir dir;
  write_file_atomic(dir.path() / "v.json", to_json(vocab, w).dump());
  write_file_atomic(dir.path() / "v.jsonl", write_vectors_jsonl(vecs, w, vocab.size()));
  WeightConfig read_w;
  CHECK(read_vocabulary(dir.path() / "v.json", &read_w) == vocab);
  CHECK(read_w == w);
  auto back = read_vectors_jsonl(dir.path() / "v.jsonl");
  REQUIRE(back.size() == vecs.size());
  for (const auto& [id, v] : vecs) CHECK(max_abs_diff(back.at(id).components, v.components) == 0.0);
}

TEST_CASE("weights are validated") {
  WeightConfig w;
  w.w_c = -1;
  CHECK_THROWS_AS(w.validate(), UserError);
}
