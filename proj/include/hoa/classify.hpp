#pragma once

// Article- and journal-level classification: hybrid journal status,
// original-article filtering, paratext detection, regular-issue detection,
// publication year and open access status.

#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hoa/core_model.hpp"
#include "hoa/ingest.hpp"

namespace hoa {

// ---------------------------------------------------------------------------
// Journals

using JournalIndex = std::map<Issn, Journal>;

/// True iff neither the ISSN-L nor any variant is on a fully OA list.
inline bool is_hybrid_journal(const Journal& journal, const std::set<Issn>& fully_oa) {
  if (fully_oa.count(journal.issn_l)) return false;
  for (const auto& v : journal.issn_variants)
    if (fully_oa.count(v)) return false;
  return true;
}

/// Journals named in the agreement dump, keyed by ISSN-L.
inline JournalIndex build_journal_index(const std::vector<AgreementListing>& listings,
                                        const IssnLinkTable& links,
                                        const std::set<Issn>& fully_oa) {
  std::map<Issn, std::set<Issn>> variants;
  for (const auto& [issn, issn_l] : links.links()) variants[issn_l].insert(issn);

  JournalIndex index;
  for (const auto& a : listings) {
    for (const auto& issn_l : a.journal_issn_ls) {
      auto [it, fresh] = index.try_emplace(issn_l, Journal{issn_l, {issn_l}, a.publisher, true, ""});
      if (!fresh && !a.publisher.empty() &&
          (it->second.publisher.empty() || a.publisher < it->second.publisher))
        it->second.publisher = a.publisher;
    }
  }
  for (auto& [issn_l, j] : index) {
    if (auto it = variants.find(issn_l); it != variants.end())
      j.issn_variants.insert(it->second.begin(), it->second.end());
    j.is_hybrid = is_hybrid_journal(j, fully_oa);
  }
  return index;
}

// ---------------------------------------------------------------------------
// Publication year

inline int assign_year(std::span<const Date> dates) {
  if (dates.empty()) throw Error(Errc::NoDate, "record carries no publication date");
  return year_of(*std::min_element(dates.begin(), dates.end()));
}

inline int assign_year(const ArticleRecord& r) { return year_of(r.pub_date); }

// ---------------------------------------------------------------------------
// Paratext

inline const std::vector<std::string>& default_paratext_patterns() {
  static const std::vector<std::string> patterns = {
      "front matter",
      "back matter",
      "editorial board",
      "editorial board and contents",
      "issue information",
      "table of contents",
      "contents",
      "(?:acknowledge?ments? (?:of|to)|thanks to) (?:our |the )?(?:reviewers|referees)",
      "(?:reviewers?|referees?) acknowledge?ments?",
      "peer[- ]review(?:er)?s? acknowledge?ments?",
      "(?:list of )?reviewers",
      "(?:author |subject )?index",
      "masthead",
      "(?:front |back |inside front |inside back )?cover(?: image| picture| page)?",
  };
  return patterns;
}

/// Case-insensitive whole-title matcher. A title matches when, after
/// lowercasing and whitespace collapsing, it consists of one configured
/// pattern optionally followed by volume/issue tokens.
class ParatextMatcher {
 public:
  ParatextMatcher() : ParatextMatcher(default_paratext_patterns()) {}

  explicit ParatextMatcher(const std::vector<std::string>& patterns) : patterns_(patterns) {
    std::string alt;
    for (const auto& p : patterns_) {
      if (!alt.empty()) alt += '|';
      alt += "(?:" + p + ")";
    }
    if (alt.empty()) return;
    static const std::string suffix =
        R"((?:[\s\-:,;./()]*(?:vol|volume|issue|iss|no|number|nr|[0-9]+)\.?)*[\s.:]*)";
    re_ = std::regex("^(?:" + alt + ")" + suffix + "$",
                     std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    compiled_ = true;
  }

  /// One pattern per line; blank lines and '#' comments ignored.
  static ParatextMatcher from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
    std::vector<std::string> patterns;
    std::string line;
    while (std::getline(in, line)) {
      auto t = detail::trim(csv::strip_eol(line));
      if (t.empty() || t.front() == '#') continue;
      patterns.emplace_back(t);
    }
    try {
      return ParatextMatcher(patterns);
    } catch (const std::regex_error& e) {
      throw Error(Errc::ConfigError, "bad paratext pattern in '" + path + "': " + e.what());
    }
  }

  bool matches(std::string_view title) const {
    if (!compiled_) return false;
    std::string norm;
    bool space = false;
    for (char c : detail::trim(title)) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        space = true;
        continue;
      }
      if (space && !norm.empty()) norm.push_back(' ');
      space = false;
      norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (norm.empty()) return false;
    return std::regex_match(norm, re_);
  }

  const std::vector<std::string>& patterns() const { return patterns_; }

 private:
  std::vector<std::string> patterns_;
  std::regex re_;
  bool compiled_ = false;
};

inline bool detect_paratext(std::string_view title, const ParatextMatcher& matcher) {
  return matcher.matches(title);
}

inline bool detect_paratext(std::string_view title) {
  static const ParatextMatcher matcher;
  return matcher.matches(title);
}

// ---------------------------------------------------------------------------
// Regular issues

/// Numerical pagination: the first page token starts with a digit. Without
/// pagination, an all-digit electronic article number also qualifies.
inline bool in_regular_issue(const ArticleRecord& r) {
  if (r.pagination && !detail::trim(*r.pagination).empty()) {
    auto p = detail::trim(*r.pagination);
    return p.front() >= '0' && p.front() <= '9';
  }
  return r.article_number && detail::all_digits(detail::trim(*r.article_number));
}

// ---------------------------------------------------------------------------
// Original articles

enum class ClassMode { Allowlist, Heuristic };

struct SourcePolicy {
  ClassMode mode = ClassMode::Allowlist;
  /// Lowercased document-class labels counted as original articles.
  std::set<std::string> allowlist{"article", "review"};
  /// Lowercased labels known to be non-original; anything else is reported
  /// as UnknownDocumentClass.
  std::set<std::string> known_other{
      "meeting abstract", "editorial material", "editorial", "letter",     "note",
      "correction",       "erratum",            "book review", "news item", "proceedings paper",
      "conference paper", "retraction",         "biographical-item", "reprint", "short survey",
      "data paper",       "book chapter"};
  /// Class accepted by the heuristic mode.
  std::string heuristic_class = "journal-article";
  /// Count any version-of-record licence as open access regardless of type
  /// or embargo, mimicking sources that tag delayed access as hybrid OA.
  bool emulate_delayed_oa = false;
};

/// Allowlist mode: the document class is on the allowlist. Heuristic mode:
/// a journal article that is not paratext and appears in a regular issue.
/// Sets *unknown_class for allowlist labels that are neither allowed nor
/// known.
inline bool is_original(const ArticleRecord& r, const SourcePolicy& policy,
                        const ParatextMatcher& paratext, bool* unknown_class = nullptr) {
  std::string cls = detail::to_lower(detail::trim(r.document_class));
  if (unknown_class) *unknown_class = false;
  if (policy.mode == ClassMode::Heuristic)
    return cls == policy.heuristic_class && !paratext.matches(r.title) && in_regular_issue(r);
  if (policy.allowlist.count(cls)) return true;
  if (unknown_class && !policy.known_other.count(cls)) *unknown_class = true;
  return false;
}

// ---------------------------------------------------------------------------
// Open access

struct LicenseRules {
  std::regex cc_pattern{R"(^https?://(?:www\.)?creativecommons\.org/(?:licenses|publicdomain)/)",
                        std::regex::ECMAScript | std::regex::icase};
  int grace_days = 31;

  void set_cc_pattern(const std::string& pattern) {
    try {
      cc_pattern = std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error(Errc::ConfigError, "bad licence pattern: " + std::string(e.what()));
    }
  }
};

/// Immediate CC licence on the version of record: a statement that applies
/// to the VOR, matches the CC pattern and starts no later than the grace
/// window after publication. With emulate_delayed_oa, any VOR licence
/// counts.
inline bool oa_status(const ArticleRecord& r, const LicenseRules& rules,
                      bool emulate_delayed_oa = false) {
  Date latest = add_days(r.pub_date, rules.grace_days);
  for (const auto& l : r.license_evidence) {
    if (!l.applies_to_vor || l.url.empty()) continue;
    if (emulate_delayed_oa) return true;
    if (!std::regex_search(l.url, rules.cc_pattern)) continue;
    if (l.start_date && latest < *l.start_date) continue;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Full classification

struct ClassifyConfig {
  std::map<SourceId, SourcePolicy> policies;
  ParatextMatcher paratext;
  LicenseRules licenses;

  const SourcePolicy& policy(const SourceId& s) const {
    static const SourcePolicy fallback;
    auto it = policies.find(s);
    return it == policies.end() ? fallback : it->second;
  }
};

struct ClassifiedArticle {
  ArticleRecord record;
  int year = 0;
  bool journal_known = false;
  bool journal_hybrid = false;
  bool is_original = false;
  bool is_paratext = false;
  bool in_regular_issue = false;
  bool unknown_class = false;
  /// Licence evidence alone, independent of countability.
  bool has_oa_evidence = false;
  bool is_hybrid_oa = false;
  bool countable = false;
};

inline ClassifiedArticle classify(ArticleRecord record, const JournalIndex& journals,
                                  const ClassifyConfig& cfg) {
  ClassifiedArticle c;
  const auto& policy = cfg.policy(record.source);
  c.year = assign_year(record);
  if (auto it = journals.find(record.journal_issn_l); it != journals.end()) {
    c.journal_known = true;
    c.journal_hybrid = it->second.is_hybrid;
  }
  c.is_paratext = cfg.paratext.matches(record.title);
  c.in_regular_issue = in_regular_issue(record);
  c.is_original = is_original(record, policy, cfg.paratext, &c.unknown_class);
  c.countable = c.is_original && !c.is_paratext && c.in_regular_issue && c.journal_hybrid;
  c.has_oa_evidence = oa_status(record, cfg.licenses, policy.emulate_delayed_oa);
  c.is_hybrid_oa = c.countable && c.has_oa_evidence;
  c.record = std::move(record);
  return c;
}

}  // namespace hoa
