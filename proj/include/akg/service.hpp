#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "akg/config.hpp"
#include "akg/simgraph.hpp"

namespace akg::service {

enum class ApiErrorCode { not_found, bad_request, index_not_ready };

struct ApiError {
  ApiErrorCode code;
  std::string message;

  int http_status() const;
  std::string_view code_name() const;
  nlohmann::ordered_json to_json() const;
};

struct Response {
  int status = 200;
  std::string body;  // JSON, UTF-8
};

using QueryParams = std::multimap<std::string, std::string>;

/// Loads the query index from a data directory. Throws UserError naming
/// the missing artifact and the stage that produces it.
std::shared_ptr<const simgraph::SimilarityIndex> load_index(const std::filesystem::path& data_dir);

// Request router over an immutable index. Every response is a pure
// function of (index, request).
class Api {
 public:
  Api(SimgraphConfig defaults, nlohmann::ordered_json meta);

  void set_index(std::shared_ptr<const simgraph::SimilarityIndex> index);
  /// `path` is the decoded request path.
  Response handle(std::string_view path, const QueryParams& params) const;

 private:
  nlohmann::ordered_json dispatch(const std::vector<std::string>& segments, const QueryParams& params) const;

  SimgraphConfig defaults_;
  nlohmann::ordered_json meta_;
  std::shared_ptr<const simgraph::SimilarityIndex> index_;
  std::atomic<bool> ready_{false};
};

/// Config snapshot plus manifest digests, as served by /api/meta.
nlohmann::ordered_json meta_json(const std::filesystem::path& data_dir);

/// Blocks serving HTTP until the process is stopped. The index loads in
/// the background; until then the API answers 503.
void serve(const Config& config, const std::filesystem::path& data_dir);

}  // namespace akg::service
