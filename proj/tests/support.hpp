#pragma once

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "akg/aggregate.hpp"
#include "akg/config.hpp"
#include "akg/core.hpp"
#include "akg/ingest.hpp"
#include "akg/keyphrase.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return AKG_FIXTURE_DIR; }
inline fs::path source_dir() { return AKG_SOURCE_DIR; }
inline fs::path cli_path() { return AKG_CLI_PATH; }

// Offline configuration over the 50-work fixture.
inline akg::Config fixture_config() {
  akg::Config c;
  c.ingest.fixture_dir = (fixture_dir() / "openalex50").string();
  c.ingest.top_n_authors = 20;
  c.ingest.parallelism = 2;
  return c;
}

inline nlohmann::json fixture_config_json() {
  return {{"ingest", {{"fixture_dir", (fixture_dir() / "openalex50").string()}, {"top_n_authors", 20}, {"parallelism", 2}}}};
}

// Seeds a data directory with the evaluation sample and Wikidata cache.
inline void seed_data_dir(const fs::path& data) {
  fs::create_directories(data / "export");
  fs::copy(fixture_dir() / "eval_sample", data / "eval", fs::copy_options::recursive);
  fs::copy_file(fixture_dir() / "wikidata_cache.json", data / "export" / "wikidata_cache.json");
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("akg-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// A local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  explicit LocalServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

inline akg::ingest::AuthorRef author(std::string id, akg::ingest::AuthorPosition pos, std::string name = {},
                                     std::optional<std::string> affiliation = std::nullopt) {
  akg::ingest::AuthorRef a;
  a.author_id = std::move(id);
  a.display_name = name.empty() ? a.author_id : std::move(name);
  a.position = pos;
  a.affiliation_name = std::move(affiliation);
  return a;
}

inline akg::ingest::WorkRecord work(std::string id, int year, std::vector<akg::ingest::AuthorRef> authors,
                                    std::vector<akg::ingest::ConceptTag> concepts = {}) {
  akg::ingest::WorkRecord w;
  w.work_id = std::move(id);
  w.title = "Title of " + w.work_id;
  w.publication_year = year;
  w.publication_date = std::to_string(year) + "-01-01";
  w.authorships = std::move(authors);
  w.concepts = std::move(concepts);
  return w;
}

inline akg::keyphrase::Keyphrase kp(std::string text, double confidence) {
  auto norm = akg::keyphrase::normalize_descriptor(text);
  return {std::move(text), std::move(norm), confidence};
}

// Seeded random corpus of works and keyphrases over a small descriptor and
// author pool.
struct RandomCorpus {
  std::vector<akg::ingest::WorkRecord> works;
  std::vector<akg::keyphrase::KeyphraseSet> keyphrases;
  std::set<std::string> authors;
};

inline RandomCorpus random_corpus(std::uint64_t seed, std::size_t n_works, std::size_t n_authors = 12,
                                  std::size_t n_descriptors = 30) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto unit = [&] { return std::uniform_real_distribution<double>(0.05, 1.0)(rng); };
  RandomCorpus c;
  for (std::size_t i = 0; i < n_works; ++i) {
    std::vector<akg::ingest::AuthorRef> authors;
    std::set<std::size_t> picked;
    const std::size_t k = 1 + uniform(4);
    while (picked.size() < k) picked.insert(uniform(n_authors));
    std::size_t pos = 0;
    for (auto a : picked) {
      auto position = pos == 0 ? akg::ingest::AuthorPosition::first
                               : (pos + 1 == k ? akg::ingest::AuthorPosition::last : akg::ingest::AuthorPosition::middle);
      auto ref = author("A" + std::to_string(100 + a), position);
      ref.is_corresponding = pos == 0 && uniform(2) == 0;
      c.authors.insert(ref.author_id);
      authors.push_back(std::move(ref));
      ++pos;
    }
    std::vector<akg::ingest::ConceptTag> concepts;
    for (std::size_t j = 0, n = 1 + uniform(4); j < n; ++j) {
      auto d = uniform(n_descriptors);
      concepts.push_back({"C" + std::to_string(d), "descriptor " + std::to_string(d), 2, unit()});
    }
    auto w = work("W" + std::to_string(1000 + i), 1990 + static_cast<int>(uniform(34)), authors, concepts);
    akg::keyphrase::KeyphraseSet set;
    set.work_id = w.work_id;
    for (std::size_t j = 0, n = uniform(3); j < n; ++j)
      set.title_keyphrases.push_back(kp("descriptor " + std::to_string(uniform(n_descriptors)), unit()));
    for (std::size_t j = 0, n = uniform(6); j < n; ++j)
      set.abstract_keyphrases.push_back(kp("descriptor " + std::to_string(uniform(n_descriptors)), unit()));
    c.works.push_back(std::move(w));
    c.keyphrases.push_back(std::move(set));
  }
  return c;
}

}  // namespace testing
