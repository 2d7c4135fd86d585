#include "akg/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "akg/core.hpp"

namespace akg::eval {

using nlohmann::json;

double thresholded_similarity(std::string_view expected, std::string_view predicted, const EvalConfig& config) {
  if (!config.embedder) throw UserError("evaluation requires an embedding provider");
  return threshold_cosine(cosine(config.embedder->embed(expected), config.embedder->embed(predicted)), config.tau);
}

Eigen::MatrixXd phi_matrix(std::span<const std::string> expected, std::span<const std::string> predicted,
                           const EvalConfig& config) {
  if (!config.embedder) throw UserError("evaluation requires an embedding provider");
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) throw UserError("tau must lie in [0, 1]");
  std::vector<DenseVector<double>> pred;
  pred.reserve(predicted.size());
  for (const auto& p : predicted) pred.push_back(config.embedder->embed(p));
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(expected.size()), static_cast<Eigen::Index>(predicted.size()));
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    const auto e = config.embedder->embed(expected[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < phi.cols(); ++j)
      phi(i, j) = threshold_cosine(cosine(e, pred[static_cast<std::size_t>(j)]), config.tau);
  }
  return phi;
}

std::optional<double> document_score(const EvalDocument& doc, const EvalConfig& config) {
  const std::size_t k = std::min(doc.predicted.size(), doc.expected.size());
  if (k == 0) return std::nullopt;

  std::vector<const keyphrase::Keyphrase*> ranked;
  for (const auto& p : doc.predicted) ranked.push_back(&p);
  std::stable_sort(ranked.begin(), ranked.end(), [](auto* a, auto* b) { return a->confidence > b->confidence; });
  std::vector<std::string> predicted;
  for (std::size_t i = 0; i < k; ++i) predicted.push_back(ranked[i]->text);
  const std::span<const std::string> expected(doc.expected.data(), k);

  const double kd = static_cast<double>(k);
  return phi_matrix(expected, predicted, config).sum() / (kd * kd);
}

EvalReport dataset_score(std::span<const EvalDocument> docs, const EvalConfig& config) {
  EvalReport report;
  for (const auto& d : docs) {
    if (auto s = document_score(d, config)) {
      report.per_document[d.doc_id] = *s;
    } else {
      ++report.n_documents_skipped;
    }
  }
  report.n_documents_scored = report.per_document.size();
  if (report.n_documents_scored == 0) throw UserError("empty evaluation set");
  // Sum in doc_id order so that S does not depend on input order.
  double sum = 0.0;
  for (const auto& [_, s] : report.per_document) sum += s;
  report.dataset_score = sum / static_cast<double>(report.n_documents_scored);
  return report;
}

std::vector<std::pair<std::string, double>> rank_extractors(const std::map<std::string, EvalReport>& reports) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [name, r] : reports) out.emplace_back(name, r.dataset_score);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<std::string> read_expected(const std::filesystem::path& file) {
  std::vector<std::string> out;
  std::istringstream in(read_file(file));
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<keyphrase::Keyphrase> read_predicted(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  const json& list = j.is_array() ? j : j.value("keyphrases", json::array());
  std::vector<keyphrase::Keyphrase> out;
  for (const auto& k : list) {
    if (!k.is_object() || !k.contains("text")) throw ParseError(file.string() + ": keyphrase entry without text");
    auto text = k["text"].get<std::string>();
    out.push_back({text, keyphrase::normalize_descriptor(text), k.value("confidence", 0.0)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
  return out;
}

nlohmann::ordered_json predicted_json(std::string_view doc_id, std::span<const keyphrase::Keyphrase> predicted) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc_id;
  auto& list = j["keyphrases"] = nlohmann::ordered_json::array();
  for (const auto& k : predicted) list.push_back({{"text", k.text}, {"confidence", k.confidence}});
  return j;
}

std::vector<EvalDocument> load_sample(const std::filesystem::path& root, const std::string& extractor) {
  namespace fs = std::filesystem;
  const auto expected_dir = root / "expected";
  if (!fs::is_directory(expected_dir)) throw UserError("evaluation sample has no expected/ directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(expected_dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<EvalDocument> docs;
  for (const auto& f : files) {
    EvalDocument d;
    d.doc_id = f.stem().string();
    d.expected = read_expected(f);
    auto pred = root / "predicted" / extractor / (d.doc_id + ".json");
    if (fs::exists(pred)) d.predicted = read_predicted(pred);
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<std::string> list_extractors(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  if (!fs::is_directory(root / "predicted")) return out;
  for (const auto& e : fs::directory_iterator(root / "predicted"))
    if (e.is_directory()) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::ordered_json to_json(const EvalReport& report, const std::string& extractor, const EvalConfig& config) {
  nlohmann::ordered_json j;
  j["extractor"] = extractor;
  j["tau"] = config.tau;
  j["embedder"] = config.embedder ? config.embedder->name() : "";
  j["dataset_score"] = report.dataset_score;
  j["n_documents_scored"] = report.n_documents_scored;
  j["n_documents_skipped"] = report.n_documents_skipped;
  auto& per = j["per_document"] = nlohmann::ordered_json::object();
  for (const auto& [id, s] : report.per_document) per[id] = s;
  return j;
}

std::string comparison_tsv(const std::map<std::string, EvalReport>& reports) {
  std::ostringstream out;
  out << "extractor\tS\tN\tskipped\n";
  for (const auto& [name, score] : rank_extractors(reports)) {
    const auto& r = reports.at(name);
    out << name << '\t' << json(score).dump() << '\t' << r.n_documents_scored << '\t' << r.n_documents_skipped << '\n';
  }
  return out.str();
}

}  // namespace akg::eval
