#include "akg/keyphrase.hpp"

#include <httplib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "akg/core.hpp"

namespace akg::keyphrase {

using nlohmann::json;

namespace {

// Word forms that the suffix rules would damage. Keys map to their singular.
const std::unordered_map<std::string_view, std::string_view>& singular_exceptions() {
  static const std::unordered_map<std::string_view, std::string_view> table{
      {"glass", "glass"},       {"analysis", "analysis"},     {"analyses", "analysis"},
      {"synthesis", "synthesis"}, {"syntheses", "synthesis"}, {"hypothesis", "hypothesis"},
      {"hypotheses", "hypothesis"}, {"thesis", "thesis"},     {"theses", "thesis"},
      {"diagnosis", "diagnosis"}, {"diagnoses", "diagnosis"}, {"electrolysis", "electrolysis"},
      {"series", "series"},     {"species", "species"},       {"gas", "gas"},
      {"gases", "gas"},         {"bus", "bus"},               {"buses", "bus"},
      {"lens", "lens"},         {"mass", "mass"},             {"news", "news"},
      {"data", "data"},         {"criteria", "criterion"},    {"phenomena", "phenomenon"},
      {"indices", "index"},     {"matrices", "matrix"},       {"vertices", "vertex"},
  };
  return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

// Rules, first match wins:
//   exception table
//   -sses -> -ss      (processes -> process)
//   -ies  -> -y       when longer than 4 (batteries -> battery)
//   -xes, -ches, -shes -> drop "es"
//   -s    -> ""       when longer than 3 and not ending -ss, -us, -is, -ics
std::string singularize(std::string_view token) {
  const auto& ex = singular_exceptions();
  if (auto it = ex.find(token); it != ex.end()) return std::string(it->second);
  if (ends_with(token, "sses")) return std::string(token.substr(0, token.size() - 2));
  if (ends_with(token, "ies") && token.size() > 4) return std::string(token.substr(0, token.size() - 3)) + "y";
  if (ends_with(token, "xes") || ends_with(token, "ches") || ends_with(token, "shes"))
    return std::string(token.substr(0, token.size() - 2));
  if (ends_with(token, "s") && token.size() > 3 && !ends_with(token, "ss") && !ends_with(token, "us") &&
      !ends_with(token, "is") && !ends_with(token, "ics"))
    return std::string(token.substr(0, token.size() - 1));
  return std::string(token);
}

std::string normalize_descriptor(std::string_view text) {
  auto tokens = split_ws(to_lower_ascii(text));
  if (tokens.empty()) return {};
  // Iterate to a fixed point ("criterias" -> "criteria" -> "criterion") so
  // that normalization is idempotent.
  for (std::string prev; prev != tokens.back();) {
    prev = tokens.back();
    tokens.back() = singularize(prev);
  }
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool is_stopword(std::string_view w) {
  static const std::unordered_set<std::string_view> words{
      "a",       "about",   "above",   "after",    "again",   "against", "all",     "also",     "am",
      "among",   "an",      "and",     "any",      "are",     "as",      "at",      "be",       "because",
      "been",    "before",  "being",   "below",    "between", "both",    "but",     "by",       "can",
      "could",   "did",     "do",      "does",     "doing",   "down",    "due",     "during",   "each",
      "either",  "et",      "etc",     "few",      "for",     "from",    "further", "had",      "has",
      "have",    "having",  "he",      "her",      "here",    "hers",    "him",     "his",      "how",
      "however", "i",       "if",      "in",       "into",    "is",      "it",      "its",      "itself",
      "just",    "may",     "me",      "might",    "more",    "most",    "much",    "must",     "my",
      "no",      "nor",     "not",     "now",      "of",      "off",     "on",      "once",     "only",
      "or",      "other",   "our",     "ours",     "out",     "over",    "own",     "same",     "she",
      "should",  "since",   "so",      "some",     "such",    "than",    "that",    "the",      "their",
      "theirs",  "them",    "then",    "there",    "therefore", "these", "they",    "this",     "those",
      "through", "thus",    "to",      "too",      "under",   "until",   "up",      "upon",     "us",
      "use",     "used",    "using",   "very",     "via",     "was",     "we",      "were",     "what",
      "when",    "where",   "whereas", "whether",  "which",   "while",   "who",     "whom",     "why",
      "will",    "with",    "within",  "without",  "would",   "yet",     "you",     "your",     "yours",
      "show",    "shows",   "shown",   "study",    "paper",   "present", "presents", "propose", "proposed",
      "results", "result",  "based",   "new",      "novel",   "well",    "high",    "higher",   "low",
      "lower",   "one",     "two",     "three",    "first",   "second",  "however", "herein",   "respectively",
      "report",  "reports", "reported", "compared", "improved", "improve", "reveal",  "reveals", "revealed",
      "confirm", "confirms", "confirmed", "explain", "explains", "investigate", "investigated", "demonstrate",
      "demonstrated", "obtained", "observed", "achieve", "achieved", "prior", "work",  "role",    "understanding",
      "controls", "provide", "provides", "various", "several", "different", "significantly", "significant",
  };
  return words.contains(w);
}

std::vector<std::string> generate_candidates(std::string_view text, int max_ngram) {
  // Segments are broken at punctuation and stopwords; n-grams never cross
  // a break.
  std::vector<std::vector<std::string>> runs(1);
  std::string token;
  auto flush = [&](bool boundary) {
    if (!token.empty()) {
      bool numeric = std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c) || c == '-'; });
      if (token.size() < 2 || numeric || is_stopword(token)) {
        if (!runs.back().empty()) runs.emplace_back();
      } else {
        runs.back().push_back(token);
      }
      token.clear();
    }
    if (boundary && !runs.back().empty()) runs.emplace_back();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || (c == '-' && !token.empty())) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      while (!token.empty() && token.back() == '-') token.pop_back();
      flush(!std::isspace(c));
    }
  }
  while (!token.empty() && token.back() == '-') token.pop_back();
  flush(true);

  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.size(); ++i) {
      std::string phrase;
      for (int n = 1; n <= max_ngram && i + n <= run.size(); ++n) {
        if (n > 1) phrase.push_back(' ');
        phrase += run[i + n - 1];
        if (seen.insert(phrase).second) out.push_back(phrase);
      }
    }
  }
  return out;
}

std::vector<ScoredPhrase> rank_candidates_by_embedding(std::string_view document_text,
                                                      std::span<const std::string> candidates,
                                                      const EmbeddingProvider& embedder) {
  if (candidates.empty()) throw UserError("rank_candidates_by_embedding: no candidates");
  const DenseVector<double> doc = embedder.embed(document_text);
  std::vector<ScoredPhrase> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) scored.emplace_back(c, std::clamp(cosine(embedder.embed(c), doc), 0.0, 1.0));
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return scored;
}

std::vector<ScoredPhrase> EmbeddingRankExtractor::score(std::string_view text, std::string_view,
                                                        std::size_t max_candidates) const {
  auto candidates = generate_candidates(text);
  if (candidates.empty()) return {};
  auto ranked = rank_candidates_by_embedding(text, candidates, *embedder_);
  if (ranked.size() > max_candidates) ranked.resize(max_candidates);
  return ranked;
}

const char* const kDefaultPromptTemplate =
    "Extract up to {max_candidates} keyphrases that best represent the following {field} of a "
    "battery research article. Keyphrases must not contain commas. Answer with a JSON array of "
    "objects {\"keyphrase\": string, \"score\": number between 0 and 1}, most representative "
    "first.\n\n{field}: {text}";

namespace {

constexpr const char* kStrictSuffix =
    "\n\nRespond with the JSON array only. No prose, no code fences, no explanation.";

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

LlmHttpExtractor::LlmHttpExtractor(std::string endpoint_url, std::string model, std::string api_key,
                                   std::string prompt_template)
    : endpoint_url_(std::move(endpoint_url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      prompt_template_(std::move(prompt_template)) {}

std::string LlmHttpExtractor::render_prompt(std::string_view text, std::string_view field,
                                            std::size_t max_candidates) const {
  auto p = replace_all(prompt_template_, "{max_candidates}", std::to_string(max_candidates));
  p = replace_all(p, "{field}", field);
  return replace_all(p, "{text}", text);
}

std::string LlmHttpExtractor::chat(const std::string& prompt) const {
  auto [base, path] = split_url(endpoint_url_);
  httplib::Client client(base);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  json body{{"model", model_},
            {"temperature", 0},
            {"messages", json::array({json{{"role", "system"}, {"content", "You extract keyphrases from scientific text."}},
                                      json{{"role", "user"}, {"content", prompt}}})}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw RetriableError("extractor endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw RetriableError("extractor endpoint returned HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw UserError("extractor endpoint rejected request (HTTP " + std::to_string(res->status) + "): " + res->body);
  try {
    return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ParseError("unparseable extractor response: " + res->body);
  }
}

std::vector<ScoredPhrase> LlmHttpExtractor::score(std::string_view text, std::string_view field,
                                                  std::size_t max_candidates) const {
  const auto prompt = render_prompt(text, field, max_candidates);
  auto reply = chat(prompt);
  if (auto parsed = parse_llm_keyphrases(reply)) return *parsed;
  reply = chat(prompt + kStrictSuffix);
  if (auto parsed = parse_llm_keyphrases(reply)) return *parsed;
  throw ParseError("unparseable extractor response: " + reply);
}

std::optional<std::vector<ScoredPhrase>> parse_llm_keyphrases(std::string_view reply) {
  auto first = reply.find('[');
  auto last = reply.rfind(']');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) return std::nullopt;
  json j;
  try {
    j = json::parse(reply.substr(first, last - first + 1));
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
  if (!j.is_array()) return std::nullopt;
  std::vector<ScoredPhrase> out;
  for (const auto& item : j) {
    std::string text;
    double score = 0.0;
    if (item.is_object()) {
      auto t = item.contains("keyphrase") ? item["keyphrase"] : item.value("text", json());
      auto s = item.contains("score") ? item["score"] : item.value("confidence", json());
      if (!t.is_string() || !s.is_number()) return std::nullopt;
      text = t.get<std::string>();
      score = s.get<double>();
    } else if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_number()) {
      text = item[0].get<std::string>();
      score = item[1].get<double>();
    } else {
      return std::nullopt;
    }
    if (text.find(',') != std::string::npos) return std::nullopt;
    out.emplace_back(std::move(text), score);
  }
  return out;
}

std::unique_ptr<Extractor> make_extractor(const ExtractorSpec& spec,
                                          std::shared_ptr<const EmbeddingProvider> embedder) {
  if (spec.kind == ExtractorKind::embedding_rank) {
    if (!embedder) throw UserError("embedding_rank extractor requires an embedding provider");
    return std::make_unique<EmbeddingRankExtractor>(std::move(embedder));
  }
  if (!spec.endpoint) throw UserError("llm_http extractor requires keyphrase.endpoint");
  const char* key = std::getenv("KG_LLM_API_KEY");
  return std::make_unique<LlmHttpExtractor>(
      *spec.endpoint, spec.model_name.value_or("gpt-3.5-turbo"), key ? key : "",
      spec.prompt_template.empty() ? std::string(kDefaultPromptTemplate) : spec.prompt_template);
}

std::vector<Keyphrase> finalize_keyphrases(std::span<const ScoredPhrase> scored, std::size_t cap) {
  std::map<std::string, Keyphrase> best;
  for (const auto& [text, score] : scored) {
    Keyphrase k{trim(text), normalize_descriptor(text), std::clamp(score, 0.0, 1.0)};
    if (k.normalized_text.empty()) continue;
    auto [it, inserted] = best.emplace(k.normalized_text, k);
    if (!inserted && (k.confidence > it->second.confidence ||
                      (k.confidence == it->second.confidence && k.text < it->second.text)))
      it->second = std::move(k);
  }
  std::vector<Keyphrase> out;
  for (auto& [_, k] : best) out.push_back(std::move(k));
  std::stable_sort(out.begin(), out.end(), [](const Keyphrase& a, const Keyphrase& b) {
    return a.confidence > b.confidence;  // map order already gives the name tie-break
  });
  if (out.size() > cap) out.resize(cap);
  return out;
}

KeyphraseSet extract_keyphrases(std::string_view work_id, std::string_view title,
                                const std::optional<std::string>& abstract, const Extractor& extractor,
                                std::size_t max_title, std::size_t max_abstract) {
  const bool has_title = !trim(title).empty();
  const bool has_abstract = abstract && !trim(*abstract).empty();
  if (!has_title && !has_abstract) throw UserError("extract_keyphrases: work " + std::string(work_id) + " has no text");
  KeyphraseSet set;
  set.work_id = std::string(work_id);
  // Ask for more than the cap so that normalization collisions do not
  // starve the list.
  if (has_title) set.title_keyphrases = finalize_keyphrases(extractor.score(title, "title", max_title * 3), max_title);
  if (has_abstract)
    set.abstract_keyphrases = finalize_keyphrases(extractor.score(*abstract, "abstract", max_abstract * 2), max_abstract);
  return set;
}

namespace {

nlohmann::ordered_json list_json(const std::vector<Keyphrase>& list) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& k : list) {
    nlohmann::ordered_json kj;
    kj["text"] = k.text;
    kj["normalized_text"] = k.normalized_text;
    kj["confidence"] = k.confidence;
    arr.push_back(std::move(kj));
  }
  return arr;
}

std::vector<Keyphrase> list_from_json(const json& arr) {
  std::vector<Keyphrase> out;
  for (const auto& k : arr)
    out.push_back({k.at("text").get<std::string>(), k.at("normalized_text").get<std::string>(),
                   k.at("confidence").get<double>()});
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const KeyphraseSet& set) {
  nlohmann::ordered_json j;
  j["work_id"] = set.work_id;
  j["title_keyphrases"] = list_json(set.title_keyphrases);
  j["abstract_keyphrases"] = list_json(set.abstract_keyphrases);
  return j;
}

KeyphraseSet keyphrase_set_from_json(const json& j) {
  try {
    return {j.at("work_id").get<std::string>(), list_from_json(j.at("title_keyphrases")),
            list_from_json(j.at("abstract_keyphrases"))};
  } catch (const json::exception& e) {
    throw ParseError(std::string("keyphrase record: ") + e.what());
  }
}

std::string write_keyphrases_jsonl(std::span<const KeyphraseSet> sets) {
  std::string out;
  for (const auto& s : sets) {
    out += to_json(s).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<KeyphraseSet> read_keyphrases_jsonl(const std::filesystem::path& path) {
  std::vector<KeyphraseSet> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(keyphrase_set_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace akg::keyphrase
