#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "akg/embedding.hpp"
#include "akg/keyphrase.hpp"

namespace akg::eval {

struct EvalDocument {
  std::string doc_id;
  std::vector<keyphrase::Keyphrase> predicted;  // confidence descending
  std::vector<std::string> expected;
};

struct EvalConfig {
  double tau = 0.6;
  std::shared_ptr<const EmbeddingProvider> embedder;
};

struct EvalReport {
  std::map<std::string, double> per_document;
  double dataset_score = 0.0;
  std::size_t n_documents_scored = 0;
  std::size_t n_documents_skipped = 0;
};

/// max(0, c * [c > tau]).
template <typename Scalar>
Scalar threshold_cosine(Scalar c, Scalar tau) {
  return c > tau ? std::max(Scalar(0), c) : Scalar(0);
}

/// phi(e, p) for one expected/predicted pair.
double thresholded_similarity(std::string_view expected, std::string_view predicted, const EvalConfig& config);

/// phi over the trimmed sets: rows are expected entries, columns predicted.
Eigen::MatrixXd phi_matrix(std::span<const std::string> expected, std::span<const std::string> predicted,
                           const EvalConfig& config);

/// Trims both sides to k = min(|P|, |E|) and returns sum(phi) / k^2, or
/// nullopt when k = 0.
std::optional<double> document_score(const EvalDocument& doc, const EvalConfig& config);

/// Mean over scoreable documents. Throws UserError when none are scoreable.
EvalReport dataset_score(std::span<const EvalDocument> docs, const EvalConfig& config);

/// Sorted by S descending, ties by name.
std::vector<std::pair<std::string, double>> rank_extractors(const std::map<std::string, EvalReport>& reports);

// -- sample layout -----------------------------------------------------------
//   <root>/expected/<doc_id>.txt            one keyword per line
//   <root>/predicted/<extractor>/<doc_id>.json
//   <root>/documents/<doc_id>.json          optional {"title", "abstract"}

std::vector<std::string> read_expected(const std::filesystem::path& file);
std::vector<keyphrase::Keyphrase> read_predicted(const std::filesystem::path& file);
nlohmann::ordered_json predicted_json(std::string_view doc_id, std::span<const keyphrase::Keyphrase> predicted);

/// Documents for one extractor: every expected file, paired with its
/// prediction (empty when missing).
std::vector<EvalDocument> load_sample(const std::filesystem::path& root, const std::string& extractor);
std::vector<std::string> list_extractors(const std::filesystem::path& root);

nlohmann::ordered_json to_json(const EvalReport& report, const std::string& extractor, const EvalConfig& config);
std::string comparison_tsv(const std::map<std::string, EvalReport>& reports);

}  // namespace akg::eval
