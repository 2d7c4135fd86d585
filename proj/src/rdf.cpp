#include "akg/rdf.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "akg/core.hpp"

namespace akg::rdf {

using nlohmann::json;

namespace {

// Generated from rdf/predicates.json at configure time.
constexpr const char* kPredicatesJson =
#include "akg/predicates.inc"
    ;

}  // namespace

std::string percent_encode(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::string mint_uri(EntityKind kind, std::string_view key, std::string_view ns) {
  if (ns.empty() || ns.back() != '/') throw UserError("namespace must end with '/': " + std::string(ns));
  auto encoded = percent_encode(key);
  if (encoded.empty()) throw UserError("cannot mint a URI from an empty key");
  std::string_view segment = kind == EntityKind::author ? "author/" : kind == EntityKind::work ? "work/" : "descriptor/";
  return std::string(ns) + std::string(segment) + encoded;
}

const std::string& PredicateTable::at(const std::string& role) const {
  auto it = iris.find(role);
  if (it == iris.end()) throw UserError("predicate table lacks role '" + role + "'");
  return it->second;
}

namespace {

std::string expand_ns(std::string s, std::string_view ns) {
  for (std::size_t pos = 0; (pos = s.find("{ns}", pos)) != std::string::npos; pos += ns.size()) s.replace(pos, 4, ns);
  return s;
}

}  // namespace

PredicateTable PredicateTable::from_json(const json& j, std::string_view ns) {
  PredicateTable t;
  try {
    for (const auto& [k, v] : j.at("prefixes").items()) t.prefixes[k] = expand_ns(v.get<std::string>(), ns);
    for (const auto& [k, v] : j.at("predicates").items()) t.iris[k] = expand_ns(v.get<std::string>(), ns);
  } catch (const json::exception& e) {
    throw ParseError(std::string("predicate table: ") + e.what());
  }
  for (const char* role : {"type", "author_class", "work_class", "descriptor_class", "name", "affiliation_name",
                           "affiliation_wikidata", "title", "date", "publisher", "creator", "subject", "doi", "label",
                           "descriptor_wikidata"})
    t.at(role);
  return t;
}

PredicateTable PredicateTable::defaults(std::string_view ns) { return from_json(json::parse(kPredicatesJson), ns); }

std::string_view to_string(WikidataLink::Source s) {
  switch (s) {
    case WikidataLink::Source::live: return "live";
    case WikidataLink::Source::cache: return "cache";
    case WikidataLink::Source::manual: return "manual";
  }
  return "cache";
}

bool is_qid(std::string_view s) {
  return s.size() > 1 && s[0] == 'Q' &&
         std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::set<std::string> work_descriptors(const ingest::WorkRecord& work, const keyphrase::KeyphraseSet* keyphrases,
                                       const vectors::DescriptorVocabulary& vocab) {
  std::set<std::string> out;
  for (const auto& c : work.concepts) {
    auto name = keyphrase::normalize_descriptor(c.display_name);
    if (!name.empty()) out.insert(std::move(name));
  }
  if (keyphrases) {
    for (const auto* list : {&keyphrases->title_keyphrases, &keyphrases->abstract_keyphrases})
      for (const auto& k : *list) {
        auto name = keyphrase::normalize_descriptor(k.normalized_text);
        if (vocab.find(name)) out.insert(std::move(name));
      }
  }
  return out;
}

TripleGraph build_triples(const BuildInput& in, const PredicateTable& p) {
  if (!in.authors || !in.vocabulary) throw UserError("build_triples needs author infos and a vocabulary");
  TripleGraph g;
  g.ns = in.ns;

  std::unordered_map<std::string_view, const ingest::WorkRecord*> works;
  for (const auto& w : in.works) works.emplace(w.work_id, &w);
  std::unordered_map<std::string_view, const keyphrase::KeyphraseSet*> kps;
  std::vector<std::string> offenders;
  for (const auto& k : in.keyphrases) {
    if (!works.contains(k.work_id))
      offenders.push_back("keyphrases for unknown work " + k.work_id);
    else
      kps.emplace(k.work_id, &k);
  }
  for (const auto& w : in.works)
    for (const auto& a : w.authorships)
      if (!in.authors->contains(a.author_id)) offenders.push_back("work " + w.work_id + " cites unknown author " + a.author_id);
  if (!offenders.empty()) {
    std::string msg = "dangling references:";
    for (const auto& o : offenders) msg += "\n  " + o;
    throw ConsistencyError(msg);
  }

  const auto& type = p.at("type");
  std::set<std::string> authors;
  std::set<std::string> descriptors;
  for (const auto& w : in.works) {
    const auto work = mint_uri(EntityKind::work, w.work_id, in.ns);
    g.add(work, type, Term::iri(p.at("work_class")));
    if (!w.title.empty()) g.add(work, p.at("title"), Term::literal(w.title));
    g.add(work, p.at("date"), Term::literal(w.publication_date, std::string(kXsd) + "date"));
    if (w.publisher_name) g.add(work, p.at("publisher"), Term::literal(*w.publisher_name));
    if (w.doi) g.add(work, p.at("doi"), Term::literal(*w.doi));
    for (const auto& a : w.authorships) {
      g.add(work, p.at("creator"), Term::iri(mint_uri(EntityKind::author, a.author_id, in.ns)));
      authors.insert(a.author_id);
    }
    auto kp = kps.find(w.work_id);
    for (const auto& d : work_descriptors(w, kp == kps.end() ? nullptr : kp->second, *in.vocabulary)) {
      g.add(work, p.at("subject"), Term::iri(mint_uri(EntityKind::descriptor, d, in.ns)));
      descriptors.insert(d);
    }
  }

  for (const auto& id : authors) {
    const auto& info = in.authors->at(id);
    const auto author = mint_uri(EntityKind::author, id, in.ns);
    g.add(author, type, Term::iri(p.at("author_class")));
    if (!info.display_name.empty()) g.add(author, p.at("name"), Term::literal(info.display_name));
    if (info.latest_affiliation_name) {
      g.add(author, p.at("affiliation_name"), Term::literal(*info.latest_affiliation_name));
      if (auto link = in.affiliation_links.find(id); link != in.affiliation_links.end() && is_qid(link->second.qid))
        g.add(author, p.at("affiliation_wikidata"), Term::iri(std::string(kWikidataEntity) + link->second.qid));
    }
  }

  for (const auto& d : descriptors) {
    const auto node = mint_uri(EntityKind::descriptor, d, in.ns);
    g.add(node, type, Term::iri(p.at("descriptor_class")));
    g.add(node, p.at("label"), Term::literal(d));
    if (auto link = in.descriptor_links.find(d); link != in.descriptor_links.end() && is_qid(link->second.qid))
      g.add(node, p.at("descriptor_wikidata"), Term::iri(std::string(kWikidataEntity) + link->second.qid));
  }
  return g;
}

// -- serialization -----------------------------------------------------------

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    i += len;
  }
  return true;
}

struct EncodeError {
  std::string what;
};

std::string iri_ref(std::string_view iri) {
  if (iri.empty() || !valid_utf8(iri)) throw EncodeError{"invalid IRI"};
  for (unsigned char c : iri)
    if (c <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' || c == '`' ||
        c == '\\')
      throw EncodeError{"IRI contains a character that cannot be written: " + std::string(iri)};
  return "<" + std::string(iri) + ">";
}

std::string quote_literal(std::string_view lexical) {
  if (!valid_utf8(lexical)) throw EncodeError{"literal is not valid UTF-8"};
  std::string out = "\"";
  for (unsigned char c : lexical) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c == 0x7F) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04X", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
  return out;
}

template <class RenderIri>
std::string literal_text(const Term& t, RenderIri render_iri) {
  std::string out = quote_literal(t.value);
  if (!t.language.empty()) {
    out += "@" + t.language;
  } else if (!t.datatype.empty() && t.datatype != kXsdString) {
    out += "^^" + render_iri(t.datatype);
  }
  return out;
}

[[noreturn]] void rethrow_for(const Triple& t, const EncodeError& e) {
  throw Error(ErrorKind::internal, "cannot serialize triple <" + t.subject + "> <" + t.predicate + ">: " + e.what);
}

}  // namespace

std::string ntriples_line(const Triple& t) {
  try {
    std::string obj = t.object.kind == Term::Kind::iri ? iri_ref(t.object.value)
                                                       : literal_text(t.object, [](std::string_view i) { return iri_ref(i); });
    return iri_ref(t.subject) + " " + iri_ref(t.predicate) + " " + obj + " .";
  } catch (const EncodeError& e) {
    rethrow_for(t, e);
  }
}

std::string to_ntriples(const TripleGraph& g) {
  std::vector<std::string> lines;
  lines.reserve(g.triples.size());
  for (const auto& t : g.triples) lines.push_back(ntriples_line(t));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

std::string to_turtle(const TripleGraph& g, const PredicateTable& predicates) {
  static const std::regex local_name("^[A-Za-z_][A-Za-z0-9_-]*$");
  // Longest namespace first so that nested namespaces pick the specific prefix.
  std::vector<std::pair<std::string, std::string>> prefixes(predicates.prefixes.begin(), predicates.prefixes.end());
  std::sort(prefixes.begin(), prefixes.end(),
            [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
  auto render_iri = [&](std::string_view iri) -> std::string {
    for (const auto& [prefix, ns] : prefixes) {
      if (iri.size() > ns.size() && iri.substr(0, ns.size()) == ns) {
        std::string local(iri.substr(ns.size()));
        if (std::regex_match(local, local_name)) return prefix + ":" + local;
      }
    }
    return iri_ref(iri);
  };
  auto render_object = [&](const Term& t) {
    return t.kind == Term::Kind::iri ? render_iri(t.value) : literal_text(t, render_iri);
  };
  const auto& rdf_type = predicates.at("type");

  std::ostringstream out;
  for (const auto& [prefix, ns] : predicates.prefixes) out << "@prefix " << prefix << ": " << iri_ref(ns) << " .\n";

  const Triple* prev = nullptr;
  for (const auto& t : g.triples) {
    try {
      if (!prev || prev->subject != t.subject) {
        if (prev) out << " .\n";
        out << "\n" << render_iri(t.subject) << "\n    " << (t.predicate == rdf_type ? "a" : render_iri(t.predicate))
            << " " << render_object(t.object);
      } else if (prev->predicate != t.predicate) {
        out << " ;\n    " << (t.predicate == rdf_type ? "a" : render_iri(t.predicate)) << " " << render_object(t.object);
      } else {
        out << " ,\n        " << render_object(t.object);
      }
    } catch (const EncodeError& e) {
      rethrow_for(t, e);
    }
    prev = &t;
  }
  if (prev) out << " .\n";
  return out.str();
}

// -- Wikidata ----------------------------------------------------------------

std::string cache_key(std::string_view name) {
  std::string out;
  for (const auto& t : split_ws(to_lower_ascii(name))) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

WikidataCache WikidataCache::load(const std::filesystem::path& path) {
  WikidataCache cache;
  if (!std::filesystem::exists(path)) return cache;
  try {
    auto j = json::parse(read_file(path));
    for (const auto& [key, e] : j.items()) {
      WikidataLink link;
      link.institution_name = e.at("name").get<std::string>();
      link.qid = e.at("qid").get<std::string>();
      link.retrieved_at = e.value("retrieved_at", std::string());
      link.source = e.value("origin", std::string("live")) == "manual" ? WikidataLink::Source::manual
                                                                      : WikidataLink::Source::live;
      if (!is_qid(link.qid)) throw ParseError("malformed QID '" + link.qid + "' for " + key);
      cache.entries_.emplace(cache_key(key), std::move(link));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return cache;
}

std::string WikidataCache::dump() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, link] : entries_) {
    nlohmann::ordered_json e;
    e["name"] = link.institution_name;
    e["qid"] = link.qid;
    e["retrieved_at"] = link.retrieved_at;
    e["origin"] = link.source == WikidataLink::Source::manual ? "manual" : "live";
    j[key] = std::move(e);
  }
  return j.dump(2) + "\n";
}

std::optional<WikidataLink> WikidataCache::find(std::string_view name) const {
  auto it = entries_.find(cache_key(name));
  if (it == entries_.end()) return std::nullopt;
  WikidataLink link = it->second;
  link.source = WikidataLink::Source::cache;
  return link;
}

bool WikidataCache::insert(const WikidataLink& link) {
  if (!is_qid(link.qid)) throw UserError("malformed QID '" + link.qid + "'");
  return entries_.emplace(cache_key(link.institution_name), link).second;
}

std::optional<std::string> select_qid(const json& response, std::string_view name) {
  const auto results = response.value("search", json::array());
  const auto lname = to_lower_ascii(trim(name));
  std::vector<std::string> exact, loose;
  for (const auto& r : results) {
    const auto id = r.value("id", std::string());
    if (!is_qid(id)) continue;
    const auto label = r.value("label", std::string());
    if (label == name) exact.push_back(id);
    bool ci = to_lower_ascii(label) == lname;
    for (const auto& alias : r.value("aliases", json::array()))
      if (alias.is_string() && to_lower_ascii(alias.get<std::string>()) == lname) ci = true;
    if (auto m = r.find("match"); m != r.end() && m->is_object() && to_lower_ascii(m->value("text", "")) == lname)
      ci = true;
    if (ci) loose.push_back(id);
  }
  if (exact.size() == 1) return exact.front();
  if (exact.size() > 1) return std::nullopt;  // ambiguous
  std::sort(loose.begin(), loose.end());
  loose.erase(std::unique(loose.begin(), loose.end()), loose.end());
  if (loose.size() == 1) return loose.front();
  return std::nullopt;
}

WikidataResolver::WikidataResolver(WikidataCache& cache, std::string endpoint, bool allow_network)
    : cache_(cache), endpoint_(std::move(endpoint)), allow_network_(allow_network) {}

std::optional<WikidataLink> WikidataResolver::resolve(std::string_view name) {
  if (trim(name).empty()) throw UserError("cannot resolve an empty institution name");
  if (auto hit = cache_.find(name)) return hit;
  if (!allow_network_) return std::nullopt;

  auto [base, path] = split_url(endpoint_);
  httplib::Client client(base);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  httplib::Params params{{"action", "wbsearchentities"}, {"search", std::string(trim(name))}, {"language", "en"},
                         {"type", "item"},               {"format", "json"},                 {"limit", "10"}};
  auto res = client.Get(httplib::append_query_params(path, params),
                        httplib::Headers{{"User-Agent", "akg/0.1 (knowledge graph export)"}});
  if (!res) throw RetriableError("wikidata endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw RetriableError("wikidata endpoint returned HTTP " + std::to_string(res->status));
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("wikidata response: ") + e.what());
  }
  auto qid = select_qid(body, name);
  if (!qid) return std::nullopt;
  WikidataLink link{std::string(trim(name)), *qid, utc_now_iso(), WikidataLink::Source::live};
  cache_.insert(link);
  return link;
}

}  // namespace akg::rdf
