#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "akg/embedding.hpp"

namespace akg::keyphrase {

struct Keyphrase {
  std::string text;
  std::string normalized_text;
  double confidence = 0.0;

  friend bool operator==(const Keyphrase&, const Keyphrase&) = default;
};

struct KeyphraseSet {
  std::string work_id;
  std::vector<Keyphrase> title_keyphrases;     // at most max_title
  std::vector<Keyphrase> abstract_keyphrases;  // at most max_abstract

  friend bool operator==(const KeyphraseSet&, const KeyphraseSet&) = default;
};

using ScoredPhrase = std::pair<std::string, double>;

/// Lowercase, trim, collapse inner whitespace, singularize the last token.
/// Idempotent.
std::string normalize_descriptor(std::string_view text);

/// Rule-based English singular of one token (see keyphrase.cpp for rules).
std::string singularize(std::string_view token);

bool is_stopword(std::string_view lowercase_token);

/// Uni/bi/tri-grams over runs of non-stopword tokens, lowercased,
/// deduplicated, in first-occurrence order.
std::vector<std::string> generate_candidates(std::string_view text, int max_ngram = 3);

/// Candidates ranked by cosine to the document embedding, descending, ties
/// broken lexicographically; confidences are cosines clamped to [0, 1].
std::vector<ScoredPhrase> rank_candidates_by_embedding(std::string_view document_text,
                                                      std::span<const std::string> candidates,
                                                      const EmbeddingProvider& embedder);

enum class ExtractorKind { llm_http, embedding_rank };

struct ExtractorSpec {
  ExtractorKind kind = ExtractorKind::embedding_rank;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_name;
  std::string prompt_template;
  int max_candidates = 20;
  std::size_t max_title = 2;
  std::size_t max_abstract = 10;
};

/// Default chat prompt. {max_candidates}, {field} and {text} are substituted.
extern const char* const kDefaultPromptTemplate;

class Extractor {
 public:
  virtual ~Extractor() = default;
  /// Scored phrases for one text, in any order, at most `max_candidates`.
  virtual std::vector<ScoredPhrase> score(std::string_view text, std::string_view field,
                                          std::size_t max_candidates) const = 0;
  virtual std::string name() const = 0;
};

class EmbeddingRankExtractor final : public Extractor {
 public:
  explicit EmbeddingRankExtractor(std::shared_ptr<const EmbeddingProvider> embedder)
      : embedder_(std::move(embedder)) {}
  std::vector<ScoredPhrase> score(std::string_view text, std::string_view field,
                                  std::size_t max_candidates) const override;
  std::string name() const override { return "embedding_rank-" + embedder_->name(); }

 private:
  std::shared_ptr<const EmbeddingProvider> embedder_;
};

// Chat-completion client. Temperature 0; on an unparseable reply it asks
// once more with a stricter suffix, then raises ParseError carrying the raw
// response.
class LlmHttpExtractor final : public Extractor {
 public:
  LlmHttpExtractor(std::string endpoint_url, std::string model, std::string api_key,
                   std::string prompt_template = kDefaultPromptTemplate);
  std::vector<ScoredPhrase> score(std::string_view text, std::string_view field,
                                  std::size_t max_candidates) const override;
  std::string name() const override { return "llm_http-" + model_; }

  std::string render_prompt(std::string_view text, std::string_view field, std::size_t max_candidates) const;

 private:
  std::string chat(const std::string& prompt) const;

  std::string endpoint_url_;
  std::string model_;
  std::string api_key_;
  std::string prompt_template_;
};

/// Parses a model reply into scored phrases. Accepts a JSON array of
/// {"keyphrase"|"text", "score"|"confidence"} objects or [phrase, score]
/// pairs, optionally wrapped in prose or a code fence.
std::optional<std::vector<ScoredPhrase>> parse_llm_keyphrases(std::string_view reply);

std::unique_ptr<Extractor> make_extractor(const ExtractorSpec& spec,
                                          std::shared_ptr<const EmbeddingProvider> embedder);

/// Normalizes, drops duplicate normalized texts (keeping the best score),
/// clamps confidences, sorts by confidence descending and truncates.
std::vector<Keyphrase> finalize_keyphrases(std::span<const ScoredPhrase> scored, std::size_t cap);

KeyphraseSet extract_keyphrases(std::string_view work_id, std::string_view title,
                                const std::optional<std::string>& abstract, const Extractor& extractor,
                                std::size_t max_title = 2, std::size_t max_abstract = 10);

nlohmann::ordered_json to_json(const KeyphraseSet& set);
KeyphraseSet keyphrase_set_from_json(const nlohmann::json& j);
std::string write_keyphrases_jsonl(std::span<const KeyphraseSet> sets);
std::vector<KeyphraseSet> read_keyphrases_jsonl(const std::filesystem::path& path);

}  // namespace akg::keyphrase
