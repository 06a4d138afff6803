#pragma once

// Shared domain types for hybrid open access measurement: identifiers,
// article records, agreements, crosswalk entries and indicator rows.
// Everything here is a plain value type with no I/O.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hoa {

enum class Errc {
  MalformedIssn,
  ChecksumFailure,
  MalformedDate,
  MissingColumn,
  InvertedWindow,
  MissingDuration,
  ConflictingLink,
  SchemaViolation,
  DuplicateRecord,
  SelfAssociation,
  NoDate,
  UnknownDocumentClass,
  SampleTooLarge,
  InsufficientPairs,
  ZeroVariance,
  UnknownDoi,
  ConfigError,
  DependencyError,
  IoError,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedIssn: return "MalformedIssn";
    case Errc::ChecksumFailure: return "ChecksumFailure";
    case Errc::MalformedDate: return "MalformedDate";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::InvertedWindow: return "InvertedWindow";
    case Errc::MissingDuration: return "MissingDuration";
    case Errc::ConflictingLink: return "ConflictingLink";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::DuplicateRecord: return "DuplicateRecord";
    case Errc::SelfAssociation: return "SelfAssociation";
    case Errc::NoDate: return "NoDate";
    case Errc::UnknownDocumentClass: return "UnknownDocumentClass";
    case Errc::SampleTooLarge: return "SampleTooLarge";
    case Errc::InsufficientPairs: return "InsufficientPairs";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::UnknownDoi: return "UnknownDoi";
    case Errc::ConfigError: return "ConfigError";
    case Errc::DependencyError: return "DependencyError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ISSN

/// An ISSN in canonical "NNNN-NNNC" form with a verified mod-11 check digit.
class Issn {
 public:
  /// Parses and validates; throws MalformedIssn or ChecksumFailure.
  static Issn parse(std::string_view raw) {
    std::string_view s = detail::trim(raw);
    std::array<char, 8> d{};
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c == '-' && i == 4 && n == 4) continue;
      if (n >= 8) throw Error(Errc::MalformedIssn, "too long: '" + std::string(raw) + "'");
      if (c >= '0' && c <= '9') {
        d[n++] = c;
      } else if ((c == 'x' || c == 'X') && n == 7) {
        d[n++] = 'X';
      } else {
        throw Error(Errc::MalformedIssn, "bad character in '" + std::string(raw) + "'");
      }
    }
    if (n != 8) throw Error(Errc::MalformedIssn, "wrong length: '" + std::string(raw) + "'");
    if (check_digit(std::string_view(d.data(), 7)) != d[7])
      throw Error(Errc::ChecksumFailure, "bad check digit in '" + std::string(raw) + "'");
    Issn out;
    out.digits_ = d;
    return out;
  }

  /// Check character for seven leading digits (weights 8..2, remainder
  /// complement mod 11, 10 rendered as 'X').
  static char check_digit(std::string_view seven) {
    int sum = 0;
    for (std::size_t i = 0; i < 7; ++i) sum += (seven[i] - '0') * static_cast<int>(8 - i);
    int c = (11 - sum % 11) % 11;
    return c == 10 ? 'X' : static_cast<char>('0' + c);
  }

  std::string str() const {
    std::string s(digits_.begin(), digits_.begin() + 4);
    s.push_back('-');
    s.append(digits_.begin() + 4, digits_.end());
    return s;
  }

  friend auto operator<=>(const Issn&, const Issn&) = default;

 private:
  Issn() = default;
  std::array<char, 8> digits_{};
};

inline Issn validate_issn(std::string_view raw) { return Issn::parse(raw); }

// ---------------------------------------------------------------------------
// DOI

/// Lowercases, trims and strips resolver prefixes. Absent unless the
/// remainder starts with "10.".
inline std::optional<std::string> normalize_doi(std::string_view raw) {
  std::string_view s = detail::trim(raw);
  static constexpr std::string_view kPrefixes[] = {
      "https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/",
      "doi.org/",         "dx.doi.org/",     "doi:",
  };
  bool stripped = true;
  while (stripped) {
    stripped = false;
    for (auto p : kPrefixes) {
      if (detail::starts_with_ci(s, p)) {
        s = detail::trim(s.substr(p.size()));
        stripped = true;
      }
    }
  }
  if (s.size() < 4 || s.substr(0, 3) != "10.") return std::nullopt;
  return detail::to_lower(s);
}

// ---------------------------------------------------------------------------
// Dates

using Date = std::chrono::year_month_day;

/// Parses ISO-8601 dates, possibly truncated to "YYYY" or "YYYY-MM".
/// Truncated dates pin to the first day of the period. Any time part after
/// 'T' is ignored.
inline Date parse_date(std::string_view raw) {
  std::string_view s = detail::trim(raw);
  if (auto t = s.find('T'); t != std::string_view::npos) s = s.substr(0, t);
  auto bad = [&] { return Error(Errc::MalformedDate, "'" + std::string(raw) + "'"); };
  auto num = [&](std::string_view part, std::size_t len) {
    if (part.size() != len || !detail::all_digits(part)) throw bad();
    int v = 0;
    for (char c : part) v = v * 10 + (c - '0');
    return v;
  };
  int y = 0;
  unsigned m = 1, d = 1;
  if (s.size() == 4) {
    y = num(s, 4);
  } else if (s.size() == 7 && s[4] == '-') {
    y = num(s.substr(0, 4), 4);
    m = static_cast<unsigned>(num(s.substr(5, 2), 2));
  } else if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    y = num(s.substr(0, 4), 4);
    m = static_cast<unsigned>(num(s.substr(5, 2), 2));
    d = static_cast<unsigned>(num(s.substr(8, 2), 2));
  } else {
    throw bad();
  }
  Date out{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!out.ok()) throw bad();
  return out;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

inline Date add_days(const Date& d, int days) {
  return Date{std::chrono::sys_days{d} + std::chrono::days{days}};
}

inline int year_of(const Date& d) { return static_cast<int>(d.year()); }

/// Inclusive calendar window.
struct DateWindow {
  Date start;
  Date end;

  bool contains(const Date& d) const { return start <= d && d <= end; }
  friend bool operator==(const DateWindow&, const DateWindow&) = default;
};

/// Closed integer range of publication years.
struct YearRange {
  int first = 2019;
  int last = 2023;

  bool contains(int y) const { return first <= y && y <= last; }
  friend bool operator==(const YearRange&, const YearRange&) = default;
};

// ---------------------------------------------------------------------------
// Sources, organisations, authorships

/// Label of a metadata provider. The open baseline is designated in
/// configuration, not by the label itself.
struct SourceId {
  std::string label;

  friend auto operator<=>(const SourceId&, const SourceId&) = default;
};

inline constexpr std::string_view kOpenScheme = "ror";

/// Normalises an open organisation identifier: strips "ror:" or a
/// ror.org URL prefix, lowercases.
inline std::string normalize_open_id(std::string_view raw) {
  std::string_view s = detail::trim(raw);
  for (std::string_view p : {"https://ror.org/", "http://ror.org/", "ror.org/", "ror:"}) {
    if (detail::starts_with_ci(s, p)) {
      s = s.substr(p.size());
      break;
    }
  }
  return detail::to_lower(detail::trim(s));
}

/// Scheme-tagged organisation identifier, rendered "scheme:value".
struct OrgId {
  std::string scheme;
  std::string value;

  static OrgId parse(std::string_view tagged) {
    auto colon = tagged.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == tagged.size())
      throw Error(Errc::SchemaViolation, "org id without scheme: '" + std::string(tagged) + "'");
    OrgId id{std::string(tagged.substr(0, colon)), std::string(tagged.substr(colon + 1))};
    if (id.scheme == kOpenScheme) id.value = normalize_open_id(id.value);
    return id;
  }

  bool is_open() const { return scheme == kOpenScheme; }
  std::string str() const { return scheme + ":" + value; }

  friend auto operator<=>(const OrgId&, const OrgId&) = default;
};

enum class Role { First, Corresponding };

inline std::string_view role_name(Role r) { return r == Role::First ? "first" : "corresponding"; }

inline Role parse_role(std::string_view s) {
  std::string l = detail::to_lower(detail::trim(s));
  if (l == "first") return Role::First;
  if (l == "corresponding") return Role::Corresponding;
  throw Error(Errc::ConfigError, "unknown role '" + std::string(s) + "'");
}

struct Authorship {
  int position = 1;
  std::optional<bool> is_corresponding;
  std::set<OrgId> org_ids;
  std::set<std::string> country_codes;

  bool is_first() const { return position == 1; }
  friend bool operator==(const Authorship&, const Authorship&) = default;
};

struct LicenseStatement {
  std::string url;
  bool applies_to_vor = false;
  std::optional<Date> start_date;

  friend bool operator==(const LicenseStatement&, const LicenseStatement&) = default;
};

struct ArticleRecord {
  SourceId source;
  std::string native_id;
  std::optional<std::string> doi;
  Issn journal_issn_l = Issn::parse("0000-0000");
  Date pub_date{};
  std::string document_class;
  std::optional<std::string> pagination;
  std::optional<std::string> article_number;
  std::string title;
  std::vector<LicenseStatement> license_evidence;
  std::vector<Authorship> authorships;

  friend bool operator==(const ArticleRecord&, const ArticleRecord&) = default;
};

// ---------------------------------------------------------------------------
// Journals, institutions, agreements

struct Journal {
  Issn issn_l;
  std::set<Issn> issn_variants;
  std::string publisher;
  bool is_hybrid = true;
  std::string title;
};

struct Institution {
  std::string org_id;
  std::string country;
  std::set<std::string> associated_ids;
};

struct Agreement {
  std::string agreement_id;
  std::string publisher;
  std::set<Issn> journal_issn_ls;
  std::set<std::string> institution_ids;
  DateWindow window;

  friend bool operator==(const Agreement&, const Agreement&) = default;
};

struct CrosswalkEntry {
  std::string open_id;
  std::string scheme;
  std::string proprietary_id;
  std::uint64_t support = 0;

  friend auto operator<=>(const CrosswalkEntry&, const CrosswalkEntry&) = default;
};

struct AttributionRecord {
  SourceId source;
  std::string native_id;
  std::optional<std::string> doi;
  int year = 0;
  Role role = Role::First;
  std::set<std::string> agreement_ids;
  std::string matched_institution;

  bool ta_enabled() const { return !agreement_ids.empty(); }
  friend bool operator==(const AttributionRecord&, const AttributionRecord&) = default;
};

enum class GroupKind { Publisher, Country, Global };

inline std::string_view group_kind_name(GroupKind g) {
  switch (g) {
    case GroupKind::Publisher: return "publisher";
    case GroupKind::Country: return "country";
    case GroupKind::Global: return "global";
  }
  return "";
}

struct IndicatorRow {
  int year = 0;
  SourceId source;
  Role role = Role::First;
  GroupKind group_kind = GroupKind::Global;
  std::string group_key;
  std::uint64_t n_total = 0;
  std::uint64_t n_original = 0;
  std::uint64_t n_oa = 0;
  std::uint64_t n_ta_oa = 0;

  std::optional<double> oa_share() const {
    if (n_original == 0) return std::nullopt;
    return static_cast<double>(n_oa) / static_cast<double>(n_original);
  }
  std::optional<double> ta_share_of_oa() const {
    if (n_oa == 0) return std::nullopt;
    return static_cast<double>(n_ta_oa) / static_cast<double>(n_oa);
  }
  friend bool operator==(const IndicatorRow&, const IndicatorRow&) = default;
};

struct CorrelationResult {
  double rho = 0.0;
  std::size_t n = 0;
  double filter_threshold = 0.0;
};

// ---------------------------------------------------------------------------
// Publisher names

/// Maps imprint and alias spellings to a canonical publisher name.
/// Matching is case-insensitive on whitespace-collapsed names.
class PublisherAliases {
 public:
  static PublisherAliases defaults() {
    PublisherAliases a;
    a.add("Elsevier BV", "Elsevier");
    a.add("Elsevier B.V.", "Elsevier");
    a.add("Pergamon", "Elsevier");
    a.add("Cell Press", "Elsevier");
    a.add("Springer", "Springer Nature");
    a.add("Springer Science and Business Media LLC", "Springer Nature");
    a.add("Springer-Verlag", "Springer Nature");
    a.add("Nature Publishing Group", "Springer Nature");
    a.add("Wiley-Blackwell", "Wiley");
    a.add("John Wiley & Sons", "Wiley");
    a.add("Informa UK Limited", "Taylor & Francis");
    a.add("Taylor and Francis", "Taylor & Francis");
    a.add("Routledge", "Taylor & Francis");
    a.add("Oxford University Press (OUP)", "Oxford University Press");
    a.add("SAGE Publications", "SAGE");
    return a;
  }

  void add(std::string_view alias, std::string_view canonical) {
    table_[key(alias)] = collapse(canonical);
  }

  std::string normalize(std::string_view name) const {
    auto it = table_.find(key(name));
    return it != table_.end() ? it->second : collapse(name);
  }

  std::size_t size() const { return table_.size(); }

 private:
  static std::string collapse(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : detail::trim(s)) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        space = true;
        continue;
      }
      if (space && !out.empty()) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
    return out;
  }
  static std::string key(std::string_view s) { return detail::to_lower(collapse(s)); }

  std::map<std::string, std::string> table_;
};

}  // namespace hoa
