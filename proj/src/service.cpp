#include "akg/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <iostream>
#include <thread>

#include "akg/aggregate.hpp"
#include "akg/core.hpp"
#include "akg/pipeline.hpp"
#include "akg/vectors.hpp"

namespace akg::service {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int ApiError::http_status() const {
  switch (code) {
    case ApiErrorCode::not_found: return 404;
    case ApiErrorCode::bad_request: return 400;
    case ApiErrorCode::index_not_ready: return 503;
  }
  return 500;
}

std::string_view ApiError::code_name() const {
  switch (code) {
    case ApiErrorCode::not_found: return "not_found";
    case ApiErrorCode::bad_request: return "bad_request";
    case ApiErrorCode::index_not_ready: return "index_not_ready";
  }
  return "bad_request";
}

ordered_json ApiError::to_json() const {
  ordered_json j;
  j["error"]["code"] = code_name();
  j["error"]["message"] = message;
  return j;
}

std::shared_ptr<const simgraph::SimilarityIndex> load_index(const fs::path& data_dir) {
  namespace p = pipeline::paths;
  const std::pair<const char*, const char*> needed[] = {
      {p::vocabulary, "vectorize"}, {p::vectors, "vectorize"}, {p::aggregates, "aggregate"}, {p::authors, "aggregate"}};
  for (const auto& [rel, stage] : needed)
    if (!fs::exists(data_dir / rel))
      throw UserError("cannot serve: " + (data_dir / rel).string() + " is missing; run `akg " + stage +
                      "` (or `akg all`) against this data directory first");
  return std::make_shared<const simgraph::SimilarityIndex>(
      vectors::read_vocabulary(data_dir / p::vocabulary), vectors::read_vectors_jsonl(data_dir / p::vectors),
      aggregate::read_aggregates_jsonl(data_dir / p::aggregates),
      aggregate::read_author_infos_jsonl(data_dir / p::authors));
}

ordered_json meta_json(const fs::path& data_dir) {
  const auto manifest = pipeline::Manifest::load(data_dir);
  ordered_json j;
  j["config"] = manifest.config;
  auto& stages = j["stages"] = ordered_json::object();
  for (const auto& [stage, rec] : manifest.stages) {
    ordered_json s;
    s["completed_at"] = rec.completed_at;
    s["outputs"] = rec.outputs;
    stages[std::string(pipeline::to_string(stage))] = std::move(s);
  }
  return j;
}

// -- API ---------------------------------------------------------------------

namespace {

struct Fail {
  ApiError error;
};

[[noreturn]] void bad_request(std::string msg) { throw Fail{{ApiErrorCode::bad_request, std::move(msg)}}; }
[[noreturn]] void not_found(std::string msg) { throw Fail{{ApiErrorCode::not_found, std::move(msg)}}; }

std::optional<std::string> param(const QueryParams& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

double threshold_param(const QueryParams& params, double fallback) {
  auto raw = param(params, "threshold");
  if (!raw) return fallback;
  double v = 0.0;
  auto [end, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
  if (ec != std::errc() || end != raw->data() + raw->size() || !std::isfinite(v) || v < 0.0 || v > 1.0)
    bad_request("threshold must be a number in [0, 1], got '" + *raw + "'");
  return v;
}

std::size_t count_param(const QueryParams& params, const std::string& key, std::size_t fallback) {
  auto raw = param(params, key);
  if (!raw) return fallback;
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
  if (ec != std::errc() || end != raw->data() + raw->size() || v == 0 || v > 1000)
    bad_request(key + " must be an integer in [1, 1000], got '" + *raw + "'");
  return v;
}

std::string query_param(const QueryParams& params) {
  auto q = param(params, "q");
  if (!q || trim(*q).empty()) bad_request("missing search query 'q'");
  return *q;
}

ordered_json author_row(const simgraph::SimilarityIndex& index, const std::string& id) {
  return ordered_json{
      {"author_id", id}, {"display_name", index.display_name(id)}, {"nb_publications", index.nb_publications(id)}};
}

void require_author(const simgraph::SimilarityIndex& index, const std::string& id) {
  if (!index.contains(id)) not_found("unknown author '" + id + "'");
}

ordered_json profile(const simgraph::SimilarityIndex& index, const std::string& id) {
  auto j = author_row(index, id);
  auto& periods = j["periods"] = ordered_json::object();
  for (const auto& [period, b] : index.aggregate(id).periods) {
    ordered_json pj;
    pj["nb_publications"] = b.nb_publications;
    pj["nb_publications_first_author"] = b.nb_publications_first_author;
    pj["nb_publications_non_first_author"] = b.nb_publications_non_first_author;
    pj["nb_publications_corresponding"] = b.nb_publications_corresponding;
    periods[std::string(aggregate::period_key(period))] = std::move(pj);
  }
  simgraph::Ranked top;
  for (SparseVector<double>::InnerIterator it(index.vector(id).components); it; ++it)
    top.emplace_back(index.vocabulary().at(it.index()).name, it.value());
  std::sort(top.begin(), top.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  if (top.size() > 20) top.resize(20);
  j["top_descriptors"] = simgraph::ranked_json(top, "name", "weight");
  auto& co = j["co_authors"] = ordered_json::array();
  for (const auto& [other, n] : index.co_authors(id)) co.push_back(ordered_json{{"author_id", other}, {"count", n}});
  return j;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) out.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

Api::Api(SimgraphConfig defaults, ordered_json meta) : defaults_(defaults), meta_(std::move(meta)) {}

void Api::set_index(std::shared_ptr<const simgraph::SimilarityIndex> index) {
  index_ = std::move(index);
  ready_.store(true, std::memory_order_release);
}

Response Api::handle(std::string_view path, const QueryParams& params) const {
  try {
    return {200, dispatch(split_path(path), params).dump()};
  } catch (const Fail& f) {
    return {f.error.http_status(), f.error.to_json().dump()};
  } catch (const NotFound& e) {
    ApiError err{ApiErrorCode::not_found, e.what()};
    return {err.http_status(), err.to_json().dump()};
  }
}

ordered_json Api::dispatch(const std::vector<std::string>& s, const QueryParams& params) const {
  if (s.empty() || s[0] != "api") not_found("no such endpoint");
  if (s.size() == 2 && s[1] == "meta") {
    auto j = meta_;
    if (ready_.load(std::memory_order_acquire)) {
      j["index"]["n_authors"] = index_->vectors().size();
      j["index"]["vocabulary_size"] = index_->vocabulary().size();
    }
    return j;
  }
  if (!ready_.load(std::memory_order_acquire))
    throw Fail{{ApiErrorCode::index_not_ready, "the index is still loading; retry shortly"}};
  const auto& index = *index_;

  if (s.size() == 3 && s[1] == "authors" && s[2] == "search") {
    auto arr = ordered_json::array();
    for (const auto& n : index.search_authors(query_param(params)))
      arr.push_back(ordered_json{
          {"author_id", n.author_id}, {"display_name", n.display_name}, {"nb_publications", n.nb_publications}});
    return arr;
  }
  if (s.size() == 3 && s[1] == "descriptors" && s[2] == "search") {
    auto arr = ordered_json::array();
    for (const auto& [name, freq] : index.search_descriptors(query_param(params)))
      arr.push_back(ordered_json{{"name", name}, {"corpus_frequency", freq}});
    return arr;
  }
  if (s.size() == 4 && s[1] == "descriptors" && s[3] == "authors") {
    ordered_json j;
    j["descriptor"] = s[2];
    auto& arr = j["authors"] = ordered_json::array();
    for (const auto& [id, _] : index.authors_by_descriptor(s[2])) arr.push_back(author_row(index, id));
    return j;
  }
  if (s.size() == 2 && s[1] == "communities") {
    const double threshold = threshold_param(params, defaults_.threshold);
    const auto communities = index.detect_communities(threshold, defaults_.community_max_iterations);
    int n = 0;
    for (const auto& [_, c] : communities) n = std::max(n, c + 1);
    ordered_json j;
    j["threshold"] = threshold;
    j["n_communities"] = n;
    j["communities"] = communities;
    return j;
  }
  if (s.size() >= 3 && s[1] == "authors") {
    const auto& id = s[2];
    require_author(index, id);
    if (s.size() == 3) return profile(index, id);
    if (s.size() == 4 && s[3] == "ego") {
      const double threshold = threshold_param(params, defaults_.threshold);
      const auto max = count_param(params, "max", defaults_.max_neighbors);
      return simgraph::to_json(index.ego_graph(id, threshold, max));
    }
    if (s.size() == 4 && s[3] == "similar") {
      ordered_json j;
      j["author_id"] = id;
      auto& arr = j["similar"] = ordered_json::array();
      for (const auto& [other, score] : index.top_k_similar(id, count_param(params, "k", 10))) {
        auto row = author_row(index, other);
        row["score"] = score;
        arr.push_back(std::move(row));
      }
      return j;
    }
    if (s.size() == 5 && s[3] == "shared") {
      require_author(index, s[4]);
      return simgraph::to_json(index.shared_descriptors(id, s[4]));
    }
    if (s.size() == 4 && s[3] == "wordcloud") {
      ordered_json j;
      j["author_id"] = id;
      j["words"] = simgraph::ranked_json(index.wordcloud_frequencies(id, count_param(params, "n", 50)), "name",
                                         "relative_weight");
      return j;
    }
  }
  not_found("no such endpoint");
}

// -- HTTP --------------------------------------------------------------------

void serve(const Config& config, const fs::path& data_dir) {
  pipeline::DirectoryLock lock(data_dir, false);
  // Fail fast on missing artifacts before binding the port.
  namespace p = pipeline::paths;
  for (const char* rel : {p::vocabulary, p::vectors, p::aggregates, p::authors})
    if (!fs::exists(data_dir / rel))
      throw UserError("cannot serve: " + (data_dir / rel).string() +
                      " is missing; run `akg all` against this data directory first");

  Api api(config.simgraph, meta_json(data_dir));
  httplib::Server server;
  const auto cors = config.service.cors_origin;
  auto add_cors = [cors](httplib::Response& res) {
    if (cors.empty()) return;
    res.set_header("Access-Control-Allow-Origin", cors);
    res.set_header("Vary", "Origin");
  };

  server.Get(R"(/api(/.*)?)", [&](const httplib::Request& req, httplib::Response& res) {
    QueryParams params(req.params.begin(), req.params.end());
    auto r = api.handle(req.path, params);
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
    add_cors(res);
  });
  server.Options(R"(/api(/.*)?)", [&](const httplib::Request&, httplib::Response& res) {
    add_cors(res);
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  if (!config.service.ui_dir.empty()) {
    if (!server.set_mount_point("/", config.service.ui_dir))
      throw UserError("service.ui_dir " + config.service.ui_dir + " is not a directory");
    // Deep links into the single-page app fall back to its entry point.
    const auto index_html = fs::path(config.service.ui_dir) / "index.html";
    server.set_error_handler([index_html](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && req.method == "GET" && !req.path.starts_with("/api") && fs::exists(index_html)) {
        res.status = 200;
        res.set_content(read_file(index_html), "text/html; charset=utf-8");
      }
    });
  }

  const auto& bind = config.service.bind_addr;
  const auto colon = bind.rfind(':');
  const auto host = bind.substr(0, colon);
  const int port = std::stoi(bind.substr(colon + 1));
  if (!server.bind_to_port(host, port)) throw UserError("cannot bind " + bind);

  std::exception_ptr load_error;
  std::thread loader([&] {
    try {
      api.set_index(load_index(data_dir));
      std::cerr << "akg: index ready\n";
    } catch (...) {
      load_error = std::current_exception();
      server.wait_until_ready();
      server.stop();
    }
  });
  std::cerr << "akg: serving on http://" << bind << "\n";
  server.listen_after_bind();
  loader.join();
  if (load_error) std::rethrow_exception(load_error);
}

}  // namespace akg::service
