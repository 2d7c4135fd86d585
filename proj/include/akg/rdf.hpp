#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "akg/aggregate.hpp"
#include "akg/ingest.hpp"
#include "akg/keyphrase.hpp"
#include "akg/vectors.hpp"

namespace akg::rdf {

inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view kXsdString = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view kRdfLangString = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
inline constexpr std::string_view kWikidataEntity = "http://www.wikidata.org/entity/";

struct Term {
  enum class Kind { iri, literal };
  Kind kind = Kind::iri;
  std::string value;     // IRI or lexical form
  std::string datatype;  // literals only
  std::string language;  // literals only, implies rdf:langString

  static Term iri(std::string v) { return {Kind::iri, std::move(v), {}, {}}; }
  static Term literal(std::string lexical, std::string_view datatype = kXsdString) {
    return {Kind::literal, std::move(lexical), std::string(datatype), {}};
  }

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Triple {
  std::string subject;
  std::string predicate;
  Term object;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleGraph {
  std::string ns;
  std::set<Triple> triples;

  void add(std::string s, std::string p, Term o) { triples.insert({std::move(s), std::move(p), std::move(o)}); }
  std::size_t size() const { return triples.size(); }
};

enum class EntityKind { author, work, descriptor };

/// "<ns><kind>/<percent-encoded key>". `ns` must end with '/'.
std::string mint_uri(EntityKind kind, std::string_view key, std::string_view ns);
/// RFC 3986 percent-encoding of everything outside the unreserved set.
std::string percent_encode(std::string_view s);

// Predicate and class IRIs. Defaults mirror rdf/predicates.json; the
// custom vocabulary lives under "<namespace>vocab/".
struct PredicateTable {
  std::map<std::string, std::string> iris;      // role -> IRI
  std::map<std::string, std::string> prefixes;  // prefix -> namespace IRI

  const std::string& at(const std::string& role) const;
  static PredicateTable defaults(std::string_view ns);
  /// Loads the versioned table, expanding "{ns}" to the graph namespace.
  static PredicateTable from_json(const nlohmann::json& j, std::string_view ns);
};

struct WikidataLink {
  enum class Source { live, cache, manual };
  std::string institution_name;
  std::string qid;
  std::string retrieved_at;
  Source source = Source::cache;
};
std::string_view to_string(WikidataLink::Source s);
bool is_qid(std::string_view s);

struct BuildInput {
  std::span<const ingest::WorkRecord> works;
  std::span<const keyphrase::KeyphraseSet> keyphrases;
  const std::map<std::string, aggregate::AuthorInfo>* authors = nullptr;
  const vectors::DescriptorVocabulary* vocabulary = nullptr;
  std::map<std::string, WikidataLink> affiliation_links;  // by author id
  std::map<std::string, WikidataLink> descriptor_links;   // by descriptor name
  std::string ns;
};

/// Normalized descriptor names of one work: its concepts plus keyphrases
/// that are in the vocabulary.
std::set<std::string> work_descriptors(const ingest::WorkRecord& work, const keyphrase::KeyphraseSet* keyphrases,
                                       const vectors::DescriptorVocabulary& vocab);

/// Throws ConsistencyError listing dangling references.
TripleGraph build_triples(const BuildInput& input, const PredicateTable& predicates);

/// Sorted, one triple per line, canonical escapes. Throws
/// Error(internal) naming the triple when a term cannot be encoded.
std::string to_ntriples(const TripleGraph& g);
/// Prefixed and subject-grouped; deterministic.
std::string to_turtle(const TripleGraph& g, const PredicateTable& predicates);

/// One N-Triples line for a triple (without the trailing newline).
std::string ntriples_line(const Triple& t);

// -- Wikidata ----------------------------------------------------------------

/// Lowercase, trimmed, whitespace-collapsed cache key.
std::string cache_key(std::string_view name);

// Positive lookups keyed by normalized name. Existing entries are never
// overwritten.
class WikidataCache {
 public:
  WikidataCache() = default;
  static WikidataCache load(const std::filesystem::path& path);  // missing file -> empty cache
  std::string dump() const;

  std::optional<WikidataLink> find(std::string_view name) const;
  bool insert(const WikidataLink& link);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, WikidataLink> entries_;
};

/// Picks a match from an entity-search response: a unique exact label
/// match, else a unique case-insensitive label/alias match, else nothing.
std::optional<std::string> select_qid(const nlohmann::json& search_response, std::string_view name);

class WikidataResolver {
 public:
  WikidataResolver(WikidataCache& cache, std::string endpoint, bool allow_network);
  /// Cache first; live entity search only when network use is allowed.
  /// Throws RetriableError when the endpoint is unreachable on a cache miss.
  std::optional<WikidataLink> resolve(std::string_view name);

 private:
  WikidataCache& cache_;
  std::string endpoint_;
  bool allow_network_;
};

}  // namespace akg::rdf
