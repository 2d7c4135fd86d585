#include "akg/ingest.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace akg::ingest {

using nlohmann::json;

std::string to_string(AuthorPosition p) {
  switch (p) {
    case AuthorPosition::first: return "first";
    case AuthorPosition::middle: return "middle";
    case AuthorPosition::last: return "last";
  }
  return "middle";
}

AuthorPosition position_from_string(std::string_view s) {
  if (s == "first") return AuthorPosition::first;
  if (s == "last") return AuthorPosition::last;
  if (s == "middle") return AuthorPosition::middle;
  throw ParseError("unknown author position '" + std::string(s) + "'");
}

std::string to_string(Rejection r) {
  return r == Rejection::pre_min_year ? "pre-1990" : "no-date";
}

std::string normalize_openalex_id(std::string_view raw) {
  auto slash = raw.find_last_of('/');
  std::string token(slash == std::string_view::npos ? raw : raw.substr(slash + 1));
  token = trim(token);
  for (char& c : token) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return token;
}

std::string reconstruct_abstract(const InvertedIndex& index) {
  std::map<std::int64_t, const std::string*> slots;
  for (const auto& [word, positions] : index) {
    for (auto pos : positions) {
      if (pos < 0) throw ParseError("negative abstract position for '" + word + "'");
      auto [it, inserted] = slots.emplace(pos, &word);
      if (!inserted && *it->second != word)
        throw ParseError("abstract position " + std::to_string(pos) + " claimed by '" + *it->second +
                         "' and '" + word + "'");
    }
  }
  std::string out;
  for (const auto& [pos, word] : slots) {
    if (!out.empty()) out.push_back(' ');
    out += *word;
  }
  return out;
}

InvertedIndex invert_abstract(std::string_view text) {
  InvertedIndex index;
  auto tokens = split_ws(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) index[tokens[i]].push_back(static_cast<std::int64_t>(i));
  return index;
}

namespace {

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  int month = (s[5] - '0') * 10 + (s[6] - '0');
  int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

NormalizeResult normalize_work(const RawWork& raw, std::string_view seed_concept_id, int min_year) {
  if (!raw.publication_date || !is_iso_date(*raw.publication_date)) return Rejection::no_date;
  int year = raw.publication_year.value_or(std::stoi(raw.publication_date->substr(0, 4)));
  if (year < min_year) return Rejection::pre_min_year;

  WorkRecord w;
  w.work_id = normalize_openalex_id(raw.id);
  w.doi = raw.doi;
  w.title = raw.title.value_or("");
  w.publication_year = year;
  w.publication_date = *raw.publication_date;
  if (raw.abstract_inverted_index && !raw.abstract_inverted_index->empty()) {
    auto text = reconstruct_abstract(*raw.abstract_inverted_index);
    if (!text.empty()) w.abstract_text = std::move(text);
  }
  const std::string seed = normalize_openalex_id(seed_concept_id);
  bool seen_first = false;
  for (const auto& a : raw.authorships) {
    AuthorRef ref = a;
    ref.author_id = normalize_openalex_id(a.author_id);
    if (ref.affiliation_id) ref.affiliation_id = normalize_openalex_id(*ref.affiliation_id);
    if (ref.position == AuthorPosition::first) {
      if (seen_first) ref.position = AuthorPosition::middle;
      seen_first = true;
    }
    w.authorships.push_back(std::move(ref));
  }
  for (const auto& c : raw.concepts) {
    ConceptTag tag = c;
    tag.concept_id = normalize_openalex_id(c.concept_id);
    if (tag.concept_id == seed || !(tag.score > 0.0)) continue;
    w.concepts.push_back(std::move(tag));
  }
  w.publisher_name = raw.publisher_name;
  w.source_name = raw.source_name;
  return w;
}

RawWork to_raw(const WorkRecord& w) {
  RawWork raw;
  raw.id = w.work_id;
  raw.doi = w.doi;
  raw.title = w.title;
  raw.publication_year = w.publication_year;
  raw.publication_date = w.publication_date;
  raw.authorships = w.authorships;
  raw.concepts = w.concepts;
  raw.publisher_name = w.publisher_name;
  raw.source_name = w.source_name;
  if (w.abstract_text) raw.abstract_inverted_index = invert_abstract(*w.abstract_text);
  return raw;
}

std::vector<std::string> select_top_authors(std::span<const WorkRecord> corpus, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& w : corpus) {
    std::vector<const std::string*> seen;
    for (const auto& a : w.authorships) {
      if (std::any_of(seen.begin(), seen.end(), [&](auto* s) { return *s == a.author_id; })) continue;
      seen.push_back(&a.author_id);
      ++counts[a.author_id];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (auto& [id, count] : ranked) out.push_back(std::move(id));
  return out;
}

// -- wire formats ------------------------------------------------------------

RawWork parse_raw_work(const json& j) {
  if (!j.is_object()) throw ParseError("work is not an object");
  RawWork raw;
  auto id = opt_string(j, "id");
  if (!id || trim(*id).empty()) throw ParseError("work without id");
  raw.id = *id;
  raw.doi = opt_string(j, "doi");
  raw.title = opt_string(j, "title");
  if (!raw.title) raw.title = opt_string(j, "display_name");
  if (auto it = j.find("publication_year"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError("publication_year is not an integer");
    raw.publication_year = it->get<int>();
  }
  raw.publication_date = opt_string(j, "publication_date");

  if (auto it = j.find("authorships"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("authorships is not an array");
    for (const auto& a : *it) {
      const auto author = a.value("author", json::object());
      auto author_id = author.is_object() ? opt_string(author, "id") : std::nullopt;
      if (!author_id || trim(*author_id).empty()) continue;  // unattributed authorship
      AuthorRef ref;
      ref.author_id = *author_id;
      ref.display_name = opt_string(author, "display_name").value_or("");
      ref.position = position_from_string(opt_string(a, "author_position").value_or("middle"));
      if (auto c = a.find("is_corresponding"); c != a.end() && c->is_boolean()) ref.is_corresponding = c->get<bool>();
      if (auto inst = a.find("institutions"); inst != a.end() && inst->is_array() && !inst->empty()) {
        const auto& first = inst->front();
        ref.affiliation_name = opt_string(first, "display_name");
        ref.affiliation_id = opt_string(first, "id");
      }
      raw.authorships.push_back(std::move(ref));
    }
  }

  if (auto it = j.find("concepts"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("concepts is not an array");
    for (const auto& c : *it) {
      ConceptTag tag;
      auto cid = opt_string(c, "id");
      if (!cid) throw ParseError("concept without id");
      tag.concept_id = *cid;
      tag.display_name = opt_string(c, "display_name").value_or("");
      tag.level = c.value("level", 0);
      tag.score = c.value("score", 0.0);
      if (tag.level < 0 || tag.level > 5) throw ParseError("concept level out of range: " + *cid);
      if (!(tag.score >= 0.0 && tag.score <= 1.0)) throw ParseError("concept score out of [0,1]: " + *cid);
      raw.concepts.push_back(std::move(tag));
    }
  }

  if (auto loc = j.find("primary_location"); loc != j.end() && loc->is_object()) {
    if (auto src = loc->find("source"); src != loc->end() && src->is_object()) {
      raw.source_name = opt_string(*src, "display_name");
      raw.publisher_name = opt_string(*src, "host_organization_name");
    }
  }
  if (auto p = opt_string(j, "publisher")) raw.publisher_name = p;

  if (auto it = j.find("abstract_inverted_index"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("abstract_inverted_index is not an object");
    InvertedIndex index;
    for (const auto& [word, positions] : it->items()) {
      if (!positions.is_array()) throw ParseError("abstract positions for '" + word + "' not an array");
      auto& slot = index[word];
      for (const auto& p : positions) {
        if (!p.is_number_integer() || p.get<std::int64_t>() < 0)
          throw ParseError("bad abstract position for '" + word + "'");
        slot.push_back(p.get<std::int64_t>());
      }
    }
    reconstruct_abstract(index);  // rejects position collisions up front
    raw.abstract_inverted_index = std::move(index);
  }
  return raw;
}

namespace {

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const WorkRecord& w) {
  nlohmann::ordered_json j;
  j["work_id"] = w.work_id;
  j["doi"] = opt_json(w.doi);
  j["title"] = w.title;
  j["publication_year"] = w.publication_year;
  j["publication_date"] = w.publication_date;
  j["abstract_text"] = opt_json(w.abstract_text);
  auto& authors = j["authorships"] = nlohmann::ordered_json::array();
  for (const auto& a : w.authorships) {
    nlohmann::ordered_json aj;
    aj["author_id"] = a.author_id;
    aj["display_name"] = a.display_name;
    aj["position"] = to_string(a.position);
    aj["is_corresponding"] = a.is_corresponding;
    aj["affiliation_name"] = opt_json(a.affiliation_name);
    aj["affiliation_id"] = opt_json(a.affiliation_id);
    authors.push_back(std::move(aj));
  }
  auto& concepts = j["concepts"] = nlohmann::ordered_json::array();
  for (const auto& c : w.concepts) {
    nlohmann::ordered_json cj;
    cj["concept_id"] = c.concept_id;
    cj["display_name"] = c.display_name;
    cj["level"] = c.level;
    cj["score"] = c.score;
    concepts.push_back(std::move(cj));
  }
  j["publisher_name"] = opt_json(w.publisher_name);
  j["source_name"] = opt_json(w.source_name);
  return j;
}

WorkRecord work_from_json(const json& j) {
  try {
    WorkRecord w;
    w.work_id = j.at("work_id").get<std::string>();
    w.doi = opt_string(j, "doi");
    w.title = j.at("title").get<std::string>();
    w.publication_year = j.at("publication_year").get<int>();
    w.publication_date = j.at("publication_date").get<std::string>();
    w.abstract_text = opt_string(j, "abstract_text");
    for (const auto& a : j.at("authorships")) {
      AuthorRef ref;
      ref.author_id = a.at("author_id").get<std::string>();
      ref.display_name = a.at("display_name").get<std::string>();
      ref.position = position_from_string(a.at("position").get<std::string>());
      ref.is_corresponding = a.at("is_corresponding").get<bool>();
      ref.affiliation_name = opt_string(a, "affiliation_name");
      ref.affiliation_id = opt_string(a, "affiliation_id");
      w.authorships.push_back(std::move(ref));
    }
    for (const auto& c : j.at("concepts")) {
      w.concepts.push_back({c.at("concept_id").get<std::string>(), c.at("display_name").get<std::string>(),
                            c.at("level").get<int>(), c.at("score").get<double>()});
    }
    w.publisher_name = opt_string(j, "publisher_name");
    w.source_name = opt_string(j, "source_name");
    return w;
  } catch (const json::exception& e) {
    throw ParseError(std::string("corpus record: ") + e.what());
  }
}

std::string write_corpus_jsonl(std::span<const WorkRecord> works) {
  std::string out;
  for (const auto& w : works) {
    out += to_json(w).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<WorkRecord> read_corpus_jsonl(const std::filesystem::path& path) {
  std::vector<WorkRecord> works;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      works.push_back(work_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return works;
}

nlohmann::ordered_json to_json(const HarvestSummary& s) {
  nlohmann::ordered_json j;
  j["fetched"] = s.fetched;
  j["rejected_pre1990"] = s.rejected_pre1990;
  j["rejected_no_date"] = s.rejected_no_date;
  j["kept"] = s.kept;
  return j;
}

// -- harvesting --------------------------------------------------------------

HarvestPage parse_page(std::string_view body, const std::string& origin) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": malformed page payload: " + e.what());
  }
  if (!j.is_object() || !j.contains("results") || !j["results"].is_array())
    throw ParseError(origin + ": page has no results array");
  HarvestPage page;
  const auto& results = j["results"];
  for (std::size_t i = 0; i < results.size(); ++i) {
    try {
      page.works.push_back(parse_raw_work(results[i]));
    } catch (const Error& e) {
      std::string id = results[i].is_object() ? results[i].value("id", std::string("?")) : "?";
      throw ParseError(origin + ": record " + std::to_string(i) + " (" + id + "): " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(origin + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  if (auto meta = j.find("meta"); meta != j.end() && meta->is_object()) {
    if (auto c = meta->find("next_cursor"); c != meta->end() && c->is_string()) page.next_cursor = c->get<std::string>();
  }
  return page;
}

namespace {

void check_seed(const std::string& seed) {
  bool ok = seed.size() > 1 && seed[0] == 'C' &&
            std::all_of(seed.begin() + 1, seed.end(), [](unsigned char c) { return std::isdigit(c); });
  if (!ok) throw UserError("invalid seed concept id '" + seed + "' (expected C followed by digits)");
}

}  // namespace

FixturePageSource::FixturePageSource(std::filesystem::path dir) {
  if (!std::filesystem::is_directory(dir)) throw UserError("fixture directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") pages_.push_back(entry.path());
  std::sort(pages_.begin(), pages_.end());
}

HarvestPage FixturePageSource::fetch(const std::string& seed_concept_id, const std::string& cursor) {
  check_seed(seed_concept_id);
  std::size_t index = 0;
  if (cursor != "*") {
    if (!cursor.starts_with("page:")) throw UserError("bad fixture cursor '" + cursor + "'");
    index = std::stoul(cursor.substr(5));
  }
  if (index >= pages_.size()) return {};
  auto page = parse_page(read_file(pages_[index]), pages_[index].filename().string());
  page.next_cursor = index + 1 < pages_.size() ? std::optional("page:" + std::to_string(index + 1)) : std::nullopt;
  return page;
}

std::vector<HarvestPage> FixturePageSource::fetch_all(std::size_t parallelism) const {
  std::vector<HarvestPage> out(pages_.size());
  std::vector<std::exception_ptr> errors(pages_.size());
  parallelism = std::max<std::size_t>(1, std::min(parallelism, pages_.size()));
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < parallelism; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < pages_.size(); i += parallelism) {
        try {
          out[i] = parse_page(read_file(pages_[i]), pages_[i].filename().string());
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(requests_per_second > 0 ? 1.0 / requests_per_second : 0.0))),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  auto d = base_delay * (std::int64_t{1} << std::min(attempt, 20));
  return std::min<std::chrono::milliseconds>(d, max_delay);
}

HttpPageSource::HttpPageSource(std::string base_url, std::string contact_email, double requests_per_second,
                               RetryPolicy retry, int per_page)
    : base_url_(std::move(base_url)),
      contact_email_(std::move(contact_email)),
      limiter_(requests_per_second),
      retry_(std::move(retry)),
      per_page_(per_page) {}

HarvestPage HttpPageSource::fetch(const std::string& seed_concept_id, const std::string& cursor) {
  check_seed(seed_concept_id);
  httplib::Client client(base_url_);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Params params{{"filter", "concepts.id:" + seed_concept_id},
                         {"per-page", std::to_string(per_page_)},
                         {"cursor", cursor}};
  if (!contact_email_.empty()) params.emplace("mailto", contact_email_);
  httplib::Headers headers{{"User-Agent", "akg/0.1 (mailto:" + contact_email_ + ")"}};
  const std::string path = httplib::append_query_params("/works", params);

  std::string last_failure;
  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = retry_.delay_for(attempt - 1);
      if (retry_.sleep)
        retry_.sleep(delay);
      else
        std::this_thread::sleep_for(delay);
    }
    limiter_.acquire();
    auto res = client.Get(path, headers);
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return parse_page(res->body, "page at cursor " + cursor);
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw UserError("catalogue rejected request (HTTP " + std::to_string(res->status) + "): " + res->body);
  }
  throw RetriableError("harvest failed after " + std::to_string(retry_.max_attempts) + " attempts at cursor '" +
                       cursor + "': " + last_failure);
}

std::vector<RawWork> harvest_all(PageSource& source, const std::string& seed_concept_id) {
  std::vector<RawWork> all;
  std::string cursor = "*";
  for (;;) {
    auto page = source.fetch(seed_concept_id, cursor);
    for (auto& w : page.works) all.push_back(std::move(w));
    if (!page.next_cursor || page.works.empty()) break;
    cursor = *page.next_cursor;
  }
  return all;
}

IngestResult normalize_all(std::span<const RawWork> raw, std::string_view seed_concept_id, int min_year,
                           std::size_t parallelism) {
  std::vector<NormalizeResult> results(raw.size(), Rejection::no_date);
  parallelism = std::max<std::size_t>(1, std::min(parallelism, raw.size()));
  std::vector<std::exception_ptr> errors(parallelism);
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < parallelism; ++t)
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < raw.size(); i += parallelism)
          results[i] = normalize_work(raw[i], seed_concept_id, min_year);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  IngestResult out;
  out.summary.fetched = raw.size();
  for (auto& r : results) {
    if (auto* w = std::get_if<WorkRecord>(&r)) {
      out.works.push_back(std::move(*w));
    } else if (std::get<Rejection>(r) == Rejection::pre_min_year) {
      ++out.summary.rejected_pre1990;
    } else {
      ++out.summary.rejected_no_date;
    }
  }
  out.summary.kept = out.works.size();
  return out;
}

}  // namespace akg::ingest
