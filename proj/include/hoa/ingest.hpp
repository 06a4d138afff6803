#pragma once

// Parsers for the external inputs: agreement dumps, agreement durations,
// ISSN-L link tables, fully open access journal lists, institution tables
// and newline-delimited article records. Data errors never abort a load;
// they land in a RejectLog with line number, reason and raw text.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "hoa/core_model.hpp"
#include "hoa/csv.hpp"
#include "hoa/support.hpp"

namespace hoa {

// ---------------------------------------------------------------------------
// ISSN-L link table

class IssnLinkTable {
 public:
  /// Unlisted ISSNs are their own ISSN-L.
  Issn resolve(const Issn& issn) const {
    auto it = links_.find(issn);
    return it == links_.end() ? issn : it->second;
  }

  std::set<Issn> variants_of(const Issn& issn_l) const {
    std::set<Issn> out{issn_l};
    for (const auto& [k, v] : links_)
      if (v == issn_l) out.insert(k);
    return out;
  }

  void insert(const Issn& issn, const Issn& issn_l) { links_.insert_or_assign(issn, issn_l); }
  std::size_t size() const { return links_.size(); }
  const std::map<Issn, Issn>& links() const { return links_; }

 private:
  std::map<Issn, Issn> links_;
};

/// Two columns (issn, issn_l). A key mapped to two different ISSN-Ls is
/// dropped entirely and every row carrying it is logged as ConflictingLink,
/// so the result does not depend on row order.
inline IssnLinkTable load_issn_link_table(const std::string& path, RejectLog& rejects) {
  IssnLinkTable table;
  csv::Reader reader(path);
  if (!reader.has_header()) return table;
  auto c_issn = reader.column("issn");
  auto c_link = reader.column("issn_l");

  struct Seen {
    std::set<Issn> targets;
    std::vector<csv::Row> rows;
  };
  std::map<Issn, Seen> seen;
  csv::Row row;
  while (reader.next(row)) {
    try {
      if (row.fields.empty()) throw Error(Errc::SchemaViolation, "unparseable row");
      Issn issn = Issn::parse(csv::Reader::field(row, c_issn));
      Issn link = Issn::parse(csv::Reader::field(row, c_link));
      auto& s = seen[issn];
      s.targets.insert(link);
      s.rows.push_back(row);
    } catch (const Error& e) {
      rejects.add(path, row.line, e, row.raw);
    }
  }
  for (const auto& [issn, s] : seen) {
    if (s.targets.size() == 1) {
      table.insert(issn, *s.targets.begin());
      continue;
    }
    for (const auto& r : s.rows)
      rejects.add(Reject{path, r.line, Errc::ConflictingLink,
                         "ISSN " + issn.str() + " linked to several ISSN-Ls", r.raw});
  }
  return table;
}

// ---------------------------------------------------------------------------
// Agreements

/// An agreement as listed in the journal/institution dump, before its
/// validity window is known.
struct AgreementListing {
  std::string agreement_id;
  std::string publisher;
  std::set<Issn> journal_issn_ls;
  std::set<std::string> institution_ids;

  friend bool operator==(const AgreementListing&, const AgreementListing&) = default;
};

/// Columns (agreement_id, issn, org_id, publisher); one row per
/// journal/institution pairing. Returned sorted by agreement_id.
inline std::vector<AgreementListing> load_agreement_dump(const std::string& path,
                                                         const IssnLinkTable& links,
                                                         const PublisherAliases& aliases,
                                                         RejectLog& rejects) {
  csv::Reader reader(path);
  if (!reader.has_header()) return {};
  auto c_id = reader.column("agreement_id");
  auto c_issn = reader.column("issn");
  auto c_org = reader.column("org_id");
  auto c_pub = reader.column("publisher");

  std::map<std::string, AgreementListing> by_id;
  std::map<std::string, std::set<std::string>> publishers;
  csv::Row row;
  while (reader.next(row)) {
    try {
      if (row.fields.empty()) throw Error(Errc::SchemaViolation, "unparseable row");
      std::string id(csv::Reader::field(row, c_id));
      if (id.empty()) throw Error(Errc::SchemaViolation, "empty agreement_id");
      Issn issn_l = links.resolve(Issn::parse(csv::Reader::field(row, c_issn)));
      std::string org = normalize_open_id(csv::Reader::field(row, c_org));
      if (org.empty()) throw Error(Errc::SchemaViolation, "empty org_id");
      auto& a = by_id[id];
      a.agreement_id = id;
      a.journal_issn_ls.insert(issn_l);
      a.institution_ids.insert(org);
      auto pub = csv::Reader::field(row, c_pub);
      if (!pub.empty()) publishers[id].insert(aliases.normalize(pub));
    } catch (const Error& e) {
      rejects.add(path, row.line, e, row.raw);
    }
  }
  std::vector<AgreementListing> out;
  out.reserve(by_id.size());
  for (auto& [id, a] : by_id) {
    // Smallest spelling wins when rows disagree.
    if (auto it = publishers.find(id); it != publishers.end()) a.publisher = *it->second.begin();
    out.push_back(std::move(a));
  }
  return out;
}

/// Columns (agreement_id, start_date, end_date). Listings without a
/// duration row are dropped and logged as MissingDuration. Several rows for
/// one agreement are merged into their enclosing window.
inline std::vector<Agreement> load_durations(const std::string& path,
                                             const std::vector<AgreementListing>& listings,
                                             RejectLog& rejects) {
  std::map<std::string, DateWindow> windows;
  csv::Reader reader(path);
  if (reader.has_header()) {
    auto c_id = reader.column("agreement_id");
    auto c_start = reader.column("start_date");
    auto c_end = reader.column("end_date");
    csv::Row row;
    while (reader.next(row)) {
      try {
        if (row.fields.empty()) throw Error(Errc::SchemaViolation, "unparseable row");
        std::string id(csv::Reader::field(row, c_id));
        if (id.empty()) throw Error(Errc::SchemaViolation, "empty agreement_id");
        Date start = parse_date(csv::Reader::field(row, c_start));
        Date end = parse_date(csv::Reader::field(row, c_end));
        if (end < start)
          throw Error(Errc::InvertedWindow, format_date(start) + " > " + format_date(end));
        auto [it, fresh] = windows.try_emplace(id, DateWindow{start, end});
        if (!fresh) {
          it->second.start = std::min(it->second.start, start);
          it->second.end = std::max(it->second.end, end);
        }
      } catch (const Error& e) {
        rejects.add(path, row.line, e, row.raw);
      }
    }
  }
  std::vector<Agreement> out;
  for (const auto& l : listings) {
    auto it = windows.find(l.agreement_id);
    if (it == windows.end()) {
      rejects.add(Reject{path, 0, Errc::MissingDuration, "no duration for agreement",
                         l.agreement_id});
      continue;
    }
    out.push_back(Agreement{l.agreement_id, l.publisher, l.journal_issn_ls, l.institution_ids,
                            it->second});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fully open access journal lists

/// One ISSN per line; an optional "issn" header line is skipped. Entries
/// are resolved to ISSN-L.
inline std::set<Issn> load_fully_oa_lists(const std::vector<std::string>& paths,
                                          const IssnLinkTable& links, RejectLog& rejects) {
  std::set<Issn> out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
    std::string line;
    std::size_t n = 0;
    bool first = true;
    while (std::getline(in, line)) {
      ++n;
      line = csv::strip_eol(std::move(line));
      auto t = detail::trim(line);
      if (t.empty()) continue;
      if (first && detail::to_lower(t) == "issn") {
        first = false;
        continue;
      }
      first = false;
      try {
        out.insert(links.resolve(Issn::parse(t)));
      } catch (const Error& e) {
        rejects.add(path, n, e, line);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Institutions

/// Open institution identifiers with associated (child) identifiers
/// expanded into a lookup that maps every known id to its parent(s).
class InstitutionIndex {
 public:
  void add(const Institution& inst) {
    institutions_[inst.org_id] = inst;
    parents_[inst.org_id].insert(inst.org_id);
    for (const auto& a : inst.associated_ids) parents_[a].insert(inst.org_id);
  }

  /// Parents for an associated id; the id itself for a parent; the id
  /// itself when unknown.
  std::set<std::string> resolve(const std::string& id) const {
    auto it = parents_.find(id);
    if (it == parents_.end()) return {id};
    return it->second;
  }

  bool knows(const std::string& id) const { return parents_.count(id) > 0; }
  std::size_t key_count() const { return parents_.size(); }
  const std::map<std::string, Institution>& institutions() const { return institutions_; }

  const Institution* find(const std::string& org_id) const {
    auto it = institutions_.find(org_id);
    return it == institutions_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, Institution> institutions_;
  std::map<std::string, std::set<std::string>> parents_;
};

/// Columns (org_id, country, associated_ids) with associated ids
/// pipe-separated.
inline InstitutionIndex load_institutions(const std::string& path, RejectLog& rejects) {
  InstitutionIndex index;
  csv::Reader reader(path);
  if (!reader.has_header()) return index;
  auto c_id = reader.column("org_id");
  auto c_country = reader.column("country");
  auto c_assoc = reader.column("associated_ids");
  csv::Row row;
  while (reader.next(row)) {
    try {
      if (row.fields.empty()) throw Error(Errc::SchemaViolation, "unparseable row");
      Institution inst;
      inst.org_id = normalize_open_id(csv::Reader::field(row, c_id));
      if (inst.org_id.empty()) throw Error(Errc::SchemaViolation, "empty org_id");
      inst.country = std::string(csv::Reader::field(row, c_country));
      for (const auto& a : csv::split(csv::Reader::field(row, c_assoc))) {
        auto id = normalize_open_id(a);
        if (id == inst.org_id)
          throw Error(Errc::SelfAssociation, inst.org_id + " lists itself as associate");
        inst.associated_ids.insert(id);
      }
      index.add(inst);
    } catch (const Error& e) {
      rejects.add(path, row.line, e, row.raw);
    }
  }
  return index;
}

// ---------------------------------------------------------------------------
// Article interchange (newline-delimited JSON)

namespace detail {

inline const nlohmann::json* member(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::string required_string(const nlohmann::json& obj, const char* key) {
  auto* v = member(obj, key);
  if (!v) throw Error(Errc::SchemaViolation, std::string("missing field '") + key + "'");
  if (!v->is_string()) throw Error(Errc::SchemaViolation, std::string("'") + key + "' not a string");
  auto s = v->get<std::string>();
  if (trim(s).empty()) throw Error(Errc::SchemaViolation, std::string("empty field '") + key + "'");
  return s;
}

inline std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key) {
  auto* v = member(obj, key);
  if (!v) return std::nullopt;
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  if (!v->is_string()) throw Error(Errc::SchemaViolation, std::string("'") + key + "' not a string");
  auto s = std::string(trim(v->get<std::string>()));
  if (s.empty()) return std::nullopt;
  return s;
}

inline std::string country_code(const nlohmann::json& v) {
  if (!v.is_string()) throw Error(Errc::SchemaViolation, "country not a string");
  auto s = v.get<std::string>();
  if (s.size() != 2 || !std::isalpha(static_cast<unsigned char>(s[0])) ||
      !std::isalpha(static_cast<unsigned char>(s[1])))
    throw Error(Errc::SchemaViolation, "bad country code '" + s + "'");
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Parses one interchange line. The journal ISSN is resolved to its ISSN-L;
/// the publication date is the earliest of all dates given.
inline ArticleRecord parse_article(const std::string& line, const IssnLinkTable& links) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::SchemaViolation, "line is not an object");

  ArticleRecord r;
  r.source.label = detail::required_string(j, "source");
  r.native_id = detail::required_string(j, "native_id");
  r.journal_issn_l = links.resolve(Issn::parse(detail::required_string(j, "issn")));
  r.document_class = std::string(detail::trim(detail::required_string(j, "document_class")));

  auto* pd = detail::member(j, "pub_date");
  if (!pd) throw Error(Errc::SchemaViolation, "missing field 'pub_date'");
  if (pd->is_string()) {
    r.pub_date = parse_date(pd->get<std::string>());
  } else if (pd->is_array() && !pd->empty()) {
    std::optional<Date> earliest;
    for (const auto& d : *pd) {
      if (!d.is_string()) throw Error(Errc::SchemaViolation, "pub_date entry not a string");
      Date v = parse_date(d.get<std::string>());
      if (!earliest || v < *earliest) earliest = v;
    }
    r.pub_date = *earliest;
  } else {
    throw Error(Errc::SchemaViolation, "pub_date must be a string or non-empty array");
  }

  if (auto doi = detail::optional_string(j, "doi")) {
    r.doi = normalize_doi(*doi);
    if (!r.doi) throw Error(Errc::SchemaViolation, "unparseable doi '" + *doi + "'");
  }
  r.pagination = detail::optional_string(j, "pagination");
  r.article_number = detail::optional_string(j, "article_number");
  if (auto t = detail::optional_string(j, "title")) r.title = *t;

  if (auto* lic = detail::member(j, "licenses")) {
    if (!lic->is_array()) throw Error(Errc::SchemaViolation, "'licenses' not an array");
    for (const auto& l : *lic) {
      if (!l.is_object()) throw Error(Errc::SchemaViolation, "license entry not an object");
      LicenseStatement s;
      s.url = std::string(detail::trim(detail::required_string(l, "url")));
      if (auto* vor = detail::member(l, "applies_to_vor")) {
        if (!vor->is_boolean()) throw Error(Errc::SchemaViolation, "'applies_to_vor' not boolean");
        s.applies_to_vor = vor->get<bool>();
      }
      if (auto sd = detail::optional_string(l, "start_date")) s.start_date = parse_date(*sd);
      r.license_evidence.push_back(std::move(s));
    }
  }

  if (auto* authors = detail::member(j, "authors")) {
    if (!authors->is_array()) throw Error(Errc::SchemaViolation, "'authors' not an array");
    std::set<int> positions;
    for (const auto& a : *authors) {
      if (!a.is_object()) throw Error(Errc::SchemaViolation, "author entry not an object");
      Authorship au;
      auto* pos = detail::member(a, "position");
      if (!pos || !pos->is_number_integer() || pos->get<int>() < 1)
        throw Error(Errc::SchemaViolation, "author position must be a positive integer");
      au.position = pos->get<int>();
      if (!positions.insert(au.position).second)
        throw Error(Errc::SchemaViolation, "duplicate author position");
      if (auto* c = detail::member(a, "corresponding")) {
        if (!c->is_boolean()) throw Error(Errc::SchemaViolation, "'corresponding' not boolean");
        au.is_corresponding = c->get<bool>();
      }
      if (auto* orgs = detail::member(a, "org_ids")) {
        if (!orgs->is_array()) throw Error(Errc::SchemaViolation, "'org_ids' not an array");
        for (const auto& o : *orgs) {
          if (!o.is_string()) throw Error(Errc::SchemaViolation, "org id not a string");
          au.org_ids.insert(OrgId::parse(o.get<std::string>()));
        }
      }
      if (auto* cs = detail::member(a, "countries")) {
        if (!cs->is_array()) throw Error(Errc::SchemaViolation, "'countries' not an array");
        for (const auto& c : *cs) au.country_codes.insert(detail::country_code(c));
      }
      r.authorships.push_back(std::move(au));
    }
    std::sort(r.authorships.begin(), r.authorships.end(),
              [](const Authorship& x, const Authorship& y) { return x.position < y.position; });
  }
  return r;
}

/// Canonical serialisation: keys sorted, dates ISO, ISSN canonical. Parsing
/// the result with parse_article yields an equal record.
inline nlohmann::json to_json(const ArticleRecord& r) {
  nlohmann::json j;
  j["source"] = r.source.label;
  j["native_id"] = r.native_id;
  j["issn"] = r.journal_issn_l.str();
  j["pub_date"] = format_date(r.pub_date);
  j["document_class"] = r.document_class;
  if (r.doi) j["doi"] = *r.doi;
  if (r.pagination) j["pagination"] = *r.pagination;
  if (r.article_number) j["article_number"] = *r.article_number;
  if (!r.title.empty()) j["title"] = r.title;
  if (!r.license_evidence.empty()) {
    auto& lic = j["licenses"] = nlohmann::json::array();
    for (const auto& l : r.license_evidence) {
      nlohmann::json o{{"url", l.url}, {"applies_to_vor", l.applies_to_vor}};
      if (l.start_date) o["start_date"] = format_date(*l.start_date);
      lic.push_back(std::move(o));
    }
  }
  if (!r.authorships.empty()) {
    auto& authors = j["authors"] = nlohmann::json::array();
    for (const auto& a : r.authorships) {
      nlohmann::json o{{"position", a.position}};
      if (a.is_corresponding) o["corresponding"] = *a.is_corresponding;
      auto& orgs = o["org_ids"] = nlohmann::json::array();
      for (const auto& id : a.org_ids) orgs.push_back(id.str());
      auto& cs = o["countries"] = nlohmann::json::array();
      for (const auto& c : a.country_codes) cs.push_back(c);
      authors.push_back(std::move(o));
    }
  }
  return j;
}

inline std::string to_line(const ArticleRecord& r) { return to_json(r).dump(); }

struct CorpusManifest {
  SourceId source;
  std::vector<std::string> paths;
  std::size_t record_count = 0;
  std::size_t reject_count = 0;
  std::size_t input_lines = 0;
  std::string reject_log_path;
};

namespace detail {

/// Finds native ids that occur on more than one line, using sorted runs of
/// 64-bit fingerprints spilled to temporary files. Memory is bounded by
/// the run size, not by the input length. The result over-approximates
/// (hash collisions, lines that later fail validation); callers confirm
/// with exact string comparison.
class RepeatedIdScanner {
 public:
  explicit RepeatedIdScanner(std::size_t run_size = 1u << 18) : run_size_(run_size) {
    buffer_.reserve(std::min<std::size_t>(run_size_, 1u << 12));
  }

  void add(std::string_view id) {
    buffer_.push_back(fingerprint(id));
    if (buffer_.size() >= run_size_) spill();
  }

  std::unordered_set<std::uint64_t> repeated() {
    std::unordered_set<std::uint64_t> out;
    std::sort(buffer_.begin(), buffer_.end());
    if (runs_.empty()) {
      for (std::size_t i = 1; i < buffer_.size(); ++i)
        if (buffer_[i] == buffer_[i - 1]) out.insert(buffer_[i]);
      return out;
    }
    spill();
    struct Cursor {
      std::FILE* f;
      std::uint64_t v;
    };
    auto cmp = [](const Cursor& a, const Cursor& b) { return a.v > b.v; };
    std::priority_queue<Cursor, std::vector<Cursor>, decltype(cmp)> heap(cmp);
    for (auto& run : runs_) {
      std::rewind(run.get());
      std::uint64_t v;
      if (std::fread(&v, sizeof v, 1, run.get()) == 1) heap.push({run.get(), v});
    }
    bool have_prev = false;
    std::uint64_t prev = 0;
    while (!heap.empty()) {
      auto c = heap.top();
      heap.pop();
      if (have_prev && c.v == prev) out.insert(c.v);
      prev = c.v;
      have_prev = true;
      std::uint64_t v;
      if (std::fread(&v, sizeof v, 1, c.f) == 1) heap.push({c.f, v});
    }
    return out;
  }

  std::size_t run_count() const { return runs_.size(); }

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
  };

  void spill() {
    if (buffer_.empty()) return;
    std::sort(buffer_.begin(), buffer_.end());
    std::unique_ptr<std::FILE, FileCloser> f(std::tmpfile());
    if (!f) throw Error(Errc::IoError, "cannot create temporary run file");
    if (std::fwrite(buffer_.data(), sizeof(std::uint64_t), buffer_.size(), f.get()) !=
        buffer_.size())
      throw Error(Errc::IoError, "short write to temporary run file");
    runs_.push_back(std::move(f));
    buffer_.clear();
  }

  std::size_t run_size_;
  std::vector<std::uint64_t> buffer_;
  std::vector<std::unique_ptr<std::FILE, FileCloser>> runs_;
};

inline std::optional<std::string> peek_native_id(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto it = j.find("native_id");
  if (it == j.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace detail

/// Streams records from a newline-delimited file to `sink`, one at a time.
/// Malformed lines and repeated (source, native_id) pairs are logged and
/// skipped; the first valid occurrence of an id wins. Memory use does not
/// grow with file length beyond the set of ids that actually repeat.
inline CorpusManifest load_article_stream(const std::string& path, const SourceId& source,
                                          const IssnLinkTable& links,
                                          const std::function<void(ArticleRecord&&)>& sink,
                                          RejectLog& rejects) {
  CorpusManifest manifest;
  manifest.source = source;
  manifest.paths.push_back(path);

  std::unordered_set<std::uint64_t> repeated;
  {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
    detail::RepeatedIdScanner scanner;
    std::string line;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      if (auto id = detail::peek_native_id(line)) scanner.add(*id);
    }
    repeated = scanner.repeated();
  }

  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  std::unordered_set<std::string> seen_repeated;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = csv::strip_eol(std::move(line));
    if (detail::trim(line).empty()) continue;
    ++manifest.input_lines;
    try {
      ArticleRecord r = parse_article(line, links);
      if (r.source != source)
        throw Error(Errc::SchemaViolation,
                    "source '" + r.source.label + "' in a '" + source.label + "' file");
      if (repeated.count(fingerprint(r.native_id)) &&
          !seen_repeated.insert(r.native_id).second)
        throw Error(Errc::DuplicateRecord, "repeated native_id '" + r.native_id + "'");
      ++manifest.record_count;
      sink(std::move(r));
    } catch (const Error& e) {
      ++manifest.reject_count;
      rejects.add(path, n, e, line);
    }
  }
  return manifest;
}

/// Convenience wrapper collecting a whole corpus in memory.
inline std::vector<ArticleRecord> load_articles(const std::string& path, const SourceId& source,
                                                const IssnLinkTable& links, RejectLog& rejects,
                                                CorpusManifest* manifest = nullptr) {
  std::vector<ArticleRecord> out;
  auto m = load_article_stream(
      path, source, links, [&](ArticleRecord&& r) { out.push_back(std::move(r)); }, rejects);
  if (manifest) *manifest = std::move(m);
  return out;
}

}  // namespace hoa
