#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "akg/pipeline.hpp"
#include "akg/service.hpp"
#include "support.hpp"

namespace testing {

// A data directory built by the full pipeline over the offline fixture.
struct BuiltDataDir {
  TempDir dir;
  fs::path data;

  BuiltDataDir() : data(dir.path() / "data") {
    seed_data_dir(data);
    akg::pipeline::Pipeline(fixture_config(), data).run_all();
  }
};

inline std::unique_ptr<akg::service::Api> make_api(const fs::path& data) {
  auto api = std::make_unique<akg::service::Api>(fixture_config().simgraph, akg::service::meta_json(data));
  api->set_index(akg::service::load_index(data));
  return api;
}

struct Request {
  std::string path;
  akg::service::QueryParams params;
};

// One request per endpoint, over authors and descriptors of the index.
inline std::vector<Request> endpoint_requests(const akg::simgraph::SimilarityIndex& index) {
  const auto ids = index.author_ids();
  const auto& a = ids.front();
  const auto& b = ids.back();
  const auto d = index.vocabulary().at(0).name;
  return {
      {"/api/meta", {}},
      {"/api/authors/search", {{"q", "a"}}},
      {"/api/descriptors/search", {{"q", "e"}}},
      {"/api/descriptors/" + d + "/authors", {}},
      {"/api/communities", {}},
      {"/api/communities", {{"threshold", "0.2"}}},
      {"/api/authors/" + a, {}},
      {"/api/authors/" + a + "/ego", {}},
      {"/api/authors/" + b + "/ego", {{"threshold", "0.1"}, {"max", "5"}}},
      {"/api/authors/" + a + "/similar", {{"k", "5"}}},
      {"/api/authors/" + a + "/shared/" + b, {}},
      {"/api/authors/" + a + "/wordcloud", {{"n", "10"}}},
  };
}

}  // namespace testing
