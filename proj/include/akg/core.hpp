#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace akg {

// Error taxonomy. Each kind maps to a CLI exit code and, for the service,
// to an HTTP status.
enum class ErrorKind {
  user,         // bad input, bad config, unknown entity
  not_found,
  dependency,   // stale or missing upstream stage
  retriable,    // network failure after retries
  parse,        // malformed payload
  consistency,  // dangling references between artifacts
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct NotFound : Error {
  explicit NotFound(const std::string& what) : Error(ErrorKind::not_found, what) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};
struct RetriableError : Error {
  explicit RetriableError(const std::string& what) : Error(ErrorKind::retriable, what) {}
};
struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& what) : Error(ErrorKind::consistency, what) {}
};
struct DependencyError : Error {
  explicit DependencyError(const std::string& what) : Error(ErrorKind::dependency, what) {}
};
struct UserError : Error {
  explicit UserError(const std::string& what) : Error(ErrorKind::user, what) {}
};

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
/// Splits on runs of ASCII whitespace.
std::vector<std::string> split_ws(std::string_view s);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 of a byte string / file contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Splits "http://host:port/path?q" into ("http://host:port", "/path?q").
std::pair<std::string, std::string> split_url(const std::string& url);

/// Current UTC time as ISO-8601 with seconds.
std::string utc_now_iso();

}  // namespace akg
