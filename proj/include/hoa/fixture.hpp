#pragma once

// Synthetic corpus generator with planted ground truth. One open source
// and two proprietary sources index overlapping slices of the same set of
// articles; the generator records which copies should be countable, open
// access and agreement-enabled, and the true organisation id mapping.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hoa/core_model.hpp"
#include "hoa/csv.hpp"
#include "hoa/ingest.hpp"
#include "hoa/reconcile.hpp"

namespace hoa::fixture {

struct Params {
  std::uint64_t seed = 42;
  std::size_t articles = 10000;
  std::size_t journals = 50;
  std::size_t institutions = 20;
  std::size_t agreements = 5;
  /// Share of proprietary copies whose first author carries a spurious
  /// extra affiliation.
  double noise = 0.10;
  YearRange years{2019, 2023};
  /// Publisher whose licence metadata is missing from the open source.
  std::string withhold_cc_publisher;
  /// Publisher whose closed articles receive embargoed user licences,
  /// at a rate falling from 40% (first year) to 0% (last year).
  std::string delayed_oa_publisher;
  /// Written into the generated config for the first proprietary source.
  bool emulate_delayed_oa = false;
  /// Append malformed and duplicate lines to each article file.
  bool inject_rejects = true;
};

inline const std::vector<std::string>& publishers() {
  static const std::vector<std::string> p = {"Elsevier", "Springer Nature", "Wiley", "Emerald"};
  return p;
}

struct SourceSpec {
  std::string label;
  std::string scheme;
  bool open = false;
};

inline const std::vector<SourceSpec>& sources() {
  static const std::vector<SourceSpec> s = {
      {"open", "ror", true}, {"srcA", "srcA", false}, {"srcB", "srcB", false}};
  return s;
}

struct CopyTruth {
  bool countable = false;
  bool oa = false;
  bool paratext = false;
  bool supplement = false;
  bool noisy = false;
  bool ta_first = false;
  bool ta_corresponding = false;
};

struct Truth {
  /// source label -> native_id -> planted labels
  std::map<std::string, std::map<std::string, CopyTruth>> copies;
  /// (open id, scheme) -> proprietary id
  std::map<std::pair<std::string, std::string>, std::string> crosswalk;
  /// journals of the withheld publisher
  std::set<Issn> withheld_journals;
};

struct Fixture {
  Params params;
  std::map<std::string, std::vector<ArticleRecord>> records;
  std::map<std::string, std::vector<std::string>> extra_lines;
  std::vector<std::vector<std::string>> jct_rows;
  std::vector<std::vector<std::string>> duration_rows;
  std::vector<std::vector<std::string>> link_rows;
  std::vector<std::string> doaj;
  std::vector<std::string> other_oa_list;
  std::vector<std::vector<std::string>> institution_rows;
  std::vector<std::vector<std::string>> alias_rows;
  Truth truth;
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform_below(eng_, n)); }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline Issn make_issn(std::uint32_t n) {
  char seven[8];
  std::snprintf(seven, sizeof seven, "%07u", n % 10000000u);
  std::string s(seven, 7);
  s.push_back(Issn::check_digit(s));
  return Issn::parse(s);
}

inline std::string make_ror(Rng& rng) {
  static const char* alphabet = "0123456789abcdefghjkmnpqrstvwxyz";
  std::string id = "0";
  for (int i = 0; i < 6; ++i) id.push_back(alphabet[rng.below(32)]);
  char buf[3];
  std::snprintf(buf, sizeof buf, "%02zu", rng.below(100));
  return id + buf;
}

struct Inst {
  std::string ror;
  std::string country;
  std::string hospital;  // associated id, may be empty
  std::map<std::string, std::string> prop;
  std::map<std::string, std::string> hospital_prop;
};

struct JournalSpec {
  Issn issn_l;
  Issn variant;
  std::string publisher;
  bool fully_oa = false;
};

struct AgreementSpec {
  std::string id;
  std::string publisher;
  std::set<std::size_t> journals;
  std::set<std::size_t> insts;
  DateWindow window;
};

enum class Kind { Regular, Letter, Editorial, Paratext, Supplement };
enum class Oa { Closed, Cc, Bronze, DelayedCc, OpenArchive };

struct Author {
  int position = 1;
  std::vector<std::size_t> insts;
  bool via_hospital = false;
  bool corresponding = false;
};

struct Base {
  std::size_t n = 0;
  std::size_t journal = 0;
  Date date;
  Kind kind = Kind::Regular;
  Oa oa = Oa::Closed;
  bool review = false;
  std::vector<Author> authors;
};

inline Date random_date(Rng& rng, int year) {
  int offset = static_cast<int>(rng.below(365));
  return add_days(Date{std::chrono::year{year}, std::chrono::January, std::chrono::day{1}}, offset);
}

inline std::string slug(const std::string& publisher) {
  std::string s;
  for (char c : publisher)
    if (std::isalnum(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
  return s;
}

}  // namespace detail

/// Builds a fixture deterministically from its parameters.
inline Fixture generate(const Params& params) {
  using namespace detail;
  Rng rng(params.seed);
  Fixture fx;
  fx.params = params;
  const auto& pubs = publishers();
  const auto& srcs = sources();

  // Institutions with per-scheme proprietary ids; the first quarter carry an
  // associated (hospital) id.
  static const std::vector<std::string> countries = {"DE", "NL", "SE", "FI", "GB",
                                                     "US", "CN", "FR", "HU", "ZA"};
  std::vector<Inst> insts(params.institutions);
  std::set<std::string> used_ids;
  auto fresh_ror = [&] {
    std::string id;
    do id = make_ror(rng);
    while (!used_ids.insert(id).second);
    return id;
  };
  for (std::size_t i = 0; i < insts.size(); ++i) {
    auto& in = insts[i];
    in.ror = fresh_ror();
    in.country = countries[i % countries.size()];
    if (i < std::max<std::size_t>(1, insts.size() / 4)) in.hospital = fresh_ror();
    for (const auto& s : srcs) {
      if (s.open) continue;
      in.prop[s.scheme] = s.scheme + "-" + std::to_string(1000 + i * 7);
      if (!in.hospital.empty()) in.hospital_prop[s.scheme] = s.scheme + "-h" + std::to_string(1000 + i);
    }
  }
  for (const auto& in : insts) {
    fx.institution_rows.push_back({"https://ror.org/" + in.ror, in.country, in.hospital});
    for (const auto& [scheme, id] : in.prop) fx.truth.crosswalk[{in.ror, scheme}] = id;
    for (const auto& [scheme, id] : in.hospital_prop) fx.truth.crosswalk[{in.hospital, scheme}] = id;
  }

  // Journals: hybrid titles cycle through publishers; a handful of fully OA
  // titles follow.
  std::size_t n_oa_journals = std::max<std::size_t>(2, params.journals / 10);
  std::vector<JournalSpec> journals;
  for (std::size_t j = 0; j < params.journals + n_oa_journals; ++j) {
    JournalSpec js{make_issn(static_cast<std::uint32_t>(1234000 + 17 * j)),
                   make_issn(static_cast<std::uint32_t>(2345000 + 31 * j)), pubs[j % pubs.size()],
                   j >= params.journals};
    journals.push_back(js);
    fx.link_rows.push_back({js.issn_l.str(), js.issn_l.str()});
    fx.link_rows.push_back({js.variant.str(), js.issn_l.str()});
    if (js.fully_oa) {
      // Alternate lists and alternate between ISSN-L and variant entries.
      auto& list = (j % 2) ? fx.doaj : fx.other_oa_list;
      list.push_back((j % 3) ? js.variant.str() : js.issn_l.str());
    }
  }
  if (!params.withhold_cc_publisher.empty())
    for (const auto& js : journals)
      if (!js.fully_oa && js.publisher == params.withhold_cc_publisher)
        fx.truth.withheld_journals.insert(js.issn_l);

  // One agreement per publisher plus a second, overlapping one for Wiley.
  // Every hybrid journal is listed in at least one agreement.
  auto ymd = [](int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  };
  const int y0 = params.years.first;
  std::vector<DateWindow> windows = {
      {ymd(y0, 7, 1), ymd(y0 + 3, 12, 31)}, {ymd(y0 + 1, 1, 1), ymd(y0 + 4, 12, 31)},
      {ymd(y0 + 2, 1, 1), ymd(y0 + 4, 12, 31)}, {ymd(y0, 1, 1), ymd(y0 + 2, 12, 31)},
      {ymd(y0 + 3, 1, 1), ymd(y0 + 5, 12, 31)}};
  std::vector<AgreementSpec> agreements;
  for (std::size_t a = 0; a < params.agreements; ++a) {
    AgreementSpec spec;
    char id[32];
    std::snprintf(id, sizeof id, "esac-fx-%02zu", a + 1);
    spec.id = id;
    spec.publisher = pubs[(a == 4 ? 2 : a) % pubs.size()];
    spec.window = windows[a % windows.size()];
    for (std::size_t j = 0; j < journals.size(); ++j)
      if (journals[j].publisher == spec.publisher && (journals[j].fully_oa || rng.chance(0.85)))
        spec.journals.insert(j);
    std::size_t k = 5 + rng.below(4);
    while (spec.insts.size() < std::min(k, insts.size())) spec.insts.insert(rng.below(insts.size()));
    agreements.push_back(spec);
  }
  for (std::size_t j = 0; j < params.journals; ++j) {
    bool listed = false;
    for (const auto& a : agreements) listed = listed || a.journals.count(j) > 0;
    if (listed) continue;
    for (auto& a : agreements) {
      if (a.publisher == journals[j].publisher) {
        a.journals.insert(j);
        break;
      }
    }
  }
  for (const auto& a : agreements) {
    for (auto j : a.journals) {
      for (auto i : a.insts) {
        std::string issn = rng.chance(0.3) ? journals[j].variant.str() : journals[j].issn_l.str();
        std::string pub = (a.publisher == "Wiley" && rng.chance(0.5)) ? "Wiley-Blackwell" : a.publisher;
        fx.jct_rows.push_back({a.id, issn, "https://ror.org/" + insts[i].ror, pub});
      }
    }
    fx.duration_rows.push_back({a.id, format_date(a.window.start), format_date(a.window.end)});
  }
  fx.alias_rows = {{"Wiley-Blackwell", "Wiley"}, {"Springer", "Springer Nature"}};

  auto eligible = [&](std::size_t journal, const std::vector<std::size_t>& author_insts,
                      const Date& d) {
    for (const auto& a : agreements) {
      if (!a.journals.count(journal) || !a.window.contains(d)) continue;
      for (auto i : author_insts)
        if (a.insts.count(i)) return true;
    }
    return false;
  };

  // Base articles.
  std::vector<double> inst_weight(insts.size());
  for (std::size_t i = 0; i < insts.size(); ++i) inst_weight[i] = 1.0 + static_cast<double>(i % 5);
  double weight_sum = 0;
  for (double w : inst_weight) weight_sum += w;
  auto pick_inst = [&] {
    double u = rng.uniform() * weight_sum;
    for (std::size_t i = 0; i < insts.size(); ++i) {
      if (u < inst_weight[i]) return i;
      u -= inst_weight[i];
    }
    return insts.size() - 1;
  };
  const int span = params.years.last - params.years.first + 1;

  std::vector<Base> bases;
  bases.reserve(params.articles);
  for (std::size_t n = 0; n < params.articles; ++n) {
    Base b;
    b.n = n;
    b.journal = rng.chance(0.05) ? params.journals + rng.below(n_oa_journals)
                                 : rng.below(params.journals);
    int year = rng.chance(0.02) ? params.years.first - 1
                                : params.years.first + static_cast<int>(rng.below(span));
    b.date = random_date(rng, year);
    double k = rng.uniform();
    b.kind = k < 0.04   ? Kind::Paratext
             : k < 0.07 ? Kind::Supplement
             : k < 0.10 ? Kind::Letter
             : k < 0.12 ? Kind::Editorial
                        : Kind::Regular;
    b.review = rng.chance(0.1);
    int n_authors = 1 + static_cast<int>(rng.below(4));
    for (int p = 1; p <= n_authors; ++p) {
      Author a;
      a.position = p;
      a.insts.push_back(pick_inst());
      if (rng.chance(0.05)) {
        auto extra = pick_inst();
        if (extra != a.insts.front()) a.insts.push_back(extra);
      }
      a.via_hospital = !insts[a.insts.front()].hospital.empty() && rng.chance(0.2);
      b.authors.push_back(a);
    }
    std::size_t corr = rng.chance(0.7) ? 0 : b.authors.size() - 1;
    b.authors[corr].corresponding = true;

    bool ta = eligible(b.journal, b.authors.front().insts, b.date) ||
              eligible(b.journal, b.authors[corr].insts, b.date);
    double base_rate = 0.04 + 0.03 * (year - params.years.first);
    if (rng.chance(ta ? 0.85 : base_rate)) {
      b.oa = Oa::Cc;
    } else {
      double u = rng.uniform();
      b.oa = u < 0.05 ? Oa::Bronze : u < 0.08 ? Oa::DelayedCc : Oa::Closed;
      if (b.oa == Oa::Closed && journals[b.journal].publisher == params.delayed_oa_publisher &&
          span > 1) {
        double rate = 0.4 * (params.years.last - year) / (span - 1);
        if (year >= params.years.first && rng.chance(rate)) b.oa = Oa::OpenArchive;
      }
    }
    bases.push_back(std::move(b));
  }

  // Source copies.
  for (std::size_t si = 0; si < srcs.size(); ++si) {
    const auto& src = srcs[si];
    auto& out = fx.records[src.label];
    auto& truth = fx.truth.copies[src.label];
    for (const auto& b : bases) {
      const auto& js = journals[b.journal];
      if (!src.open) {
        bool covered = src.label == "srcA" ? (b.journal % 10) < 7 : (b.journal % 10) != 9;
        if (!covered || b.kind == Kind::Paratext) continue;
        if (src.label == "srcB" && b.kind == Kind::Supplement) continue;
        if (!rng.chance(0.95)) continue;
      }
      ArticleRecord r;
      r.source.label = src.label;
      r.native_id = std::string(1, src.label == "open" ? 'o' : src.label == "srcA" ? 'a' : 'b') +
                    "-" + std::to_string(b.n);
      char doi[48];
      std::snprintf(doi, sizeof doi, "10.5555/hoa.%06zu", b.n);
      r.doi = doi;
      r.journal_issn_l = rng.chance(0.3) ? js.variant : js.issn_l;
      r.pub_date = b.date;
      r.title = "Findings on topic " + std::to_string(b.n);
      CopyTruth t;

      if (src.open) {
        r.document_class = "journal-article";
        if (b.kind == Kind::Paratext) {
          static const std::vector<std::string> paratext = {
              "Editorial Board", "Issue Information", "Front Matter", "Table of Contents",
              "Masthead", "Acknowledgement to Reviewers", "Cover Image", "Index"};
          r.title = paratext[b.n % paratext.size()];
          if (b.n % 3 == 0) r.title += " - Volume " + std::to_string(10 + b.n % 7);
          t.paratext = true;
        }
        if (b.kind == Kind::Supplement) {
          auto s = 10 + b.n % 90;
          r.pagination = "S" + std::to_string(s) + "-S" + std::to_string(s + 4);
          t.supplement = true;
        } else if (b.n % 4 == 0) {
          r.article_number = std::to_string(100000 + b.n);
        } else {
          auto p = 1 + b.n % 900;
          r.pagination = std::to_string(p) + "-" + std::to_string(p + 9);
        }
      } else {
        switch (b.kind) {
          case Kind::Regular: r.document_class = b.review ? "Review" : "Article"; break;
          case Kind::Letter: r.document_class = "Letter"; break;
          case Kind::Editorial: r.document_class = "Editorial Material"; break;
          case Kind::Supplement: r.document_class = "Meeting Abstract"; break;
          case Kind::Paratext: break;
        }
        if (b.kind == Kind::Supplement) {
          auto s = 10 + b.n % 90;
          r.pagination = "S" + std::to_string(s);
          r.doi.reset();
        } else {
          auto p = 1 + b.n % 900;
          r.pagination = std::to_string(p) + "-" + std::to_string(p + 9);
        }
        if (src.label == "srcB" && r.doi && b.n % 5 == 0)
          r.doi = "https://doi.org/10.5555/HOA." + r.doi->substr(12);
      }

      bool withheld = src.open && js.publisher == params.withhold_cc_publisher;
      if (!withheld) {
        std::string pub_slug = slug(js.publisher);
        switch (b.oa) {
          case Oa::Cc:
            r.license_evidence.push_back(
                {"https://creativecommons.org/licenses/by/4.0/", true,
                 add_days(b.date, static_cast<int>(b.n % 20))});
            break;
          case Oa::Bronze:
            r.license_evidence.push_back(
                {"https://www." + pub_slug + ".com/tdm/userlicense/1.0/", true, b.date});
            break;
          case Oa::DelayedCc:
            r.license_evidence.push_back(
                {"https://creativecommons.org/licenses/by-nc/4.0/", true, add_days(b.date, 730)});
            break;
          case Oa::OpenArchive:
            r.license_evidence.push_back(
                {"https://www." + pub_slug + ".com/open-access/userlicense/1.0/", true,
                 add_days(b.date, 365)});
            break;
          case Oa::Closed: break;
        }
        if (b.n % 7 == 0)
          r.license_evidence.push_back(
              {"https://www." + pub_slug + ".com/tdm/textmining/1.0/", false, b.date});
      }

      // Authorships. The open source carries no corresponding flags.
      bool noisy = !src.open && rng.chance(params.noise);
      for (const auto& a : b.authors) {
        Authorship au;
        au.position = a.position;
        if (!src.open) au.is_corresponding = a.corresponding;
        for (std::size_t k = 0; k < a.insts.size(); ++k) {
          const auto& in = insts[a.insts[k]];
          bool hospital = k == 0 && a.via_hospital;
          if (src.open) {
            au.org_ids.insert(OrgId{"ror", hospital ? in.hospital : in.ror});
          } else {
            au.org_ids.insert(
                OrgId{src.scheme, hospital ? in.hospital_prop.at(src.scheme) : in.prop.at(src.scheme)});
          }
          au.country_codes.insert(in.country);
        }
        if (noisy && a.position == 1) {
          std::size_t spurious = rng.below(insts.size());
          while (std::find(a.insts.begin(), a.insts.end(), spurious) != a.insts.end())
            spurious = (spurious + 1) % insts.size();
          au.org_ids.insert(OrgId{src.scheme, insts[spurious].prop.at(src.scheme)});
          au.country_codes.insert(insts[spurious].country);
        }
        r.authorships.push_back(std::move(au));
      }

      bool hybrid = !js.fully_oa;
      bool original = src.open ? (b.kind != Kind::Paratext && b.kind != Kind::Supplement)
                               : b.kind == Kind::Regular;
      t.countable = hybrid && original;
      bool cc = !withheld && b.oa == Oa::Cc;
      bool emulated = !withheld && params.emulate_delayed_oa && src.label == "srcA" &&
                      b.oa != Oa::Closed;
      t.oa = t.countable && (cc || emulated);
      t.noisy = noisy;
      if (t.oa) {
        t.ta_first = eligible(b.journal, b.authors.front().insts, b.date);
        if (!src.open) {
          for (const auto& a : b.authors)
            if (a.corresponding) t.ta_corresponding = eligible(b.journal, a.insts, b.date);
        }
      }
      truth[r.native_id] = t;
      out.push_back(std::move(r));
    }

    if (params.inject_rejects && !out.empty()) {
      auto& extra = fx.extra_lines[src.label];
      auto j = to_json(out.front());
      extra.push_back(j.dump());  // repeated native_id
      auto bad = j;
      bad.erase("issn");
      bad["native_id"] = src.label + "-bad-1";
      extra.push_back(bad.dump());
      bad = j;
      bad["issn"] = "0000-0001";
      bad["native_id"] = src.label + "-bad-2";
      extra.push_back(bad.dump());
      extra.push_back("{not json");
    }
  }
  return fx;
}

inline nlohmann::json default_config(const Params& p) {
  nlohmann::json cfg;
  cfg["sources"] = nlohmann::json::array();
  for (const auto& s : sources()) {
    nlohmann::json src{{"label", s.label},
                       {"articles", s.label + ".ndjson"},
                       {"scheme", s.scheme},
                       {"open", s.open},
                       {"mode", s.open ? "heuristic" : "allowlist"}};
    if (s.open) src["roles"] = {"first"};
    if (s.label == "srcA") src["emulate_delayed_oa"] = p.emulate_delayed_oa;
    cfg["sources"].push_back(src);
  }
  cfg["agreements"] = "jct_dump.csv";
  cfg["durations"] = "esac_durations.csv";
  cfg["issn_links"] = "issn_links.csv";
  cfg["fully_oa_lists"] = {"doaj.txt", "other_oa.txt"};
  cfg["institutions"] = "institutions.csv";
  cfg["publisher_aliases"] = "publisher_aliases.csv";
  cfg["years"] = {p.years.first, p.years.last};
  cfg["roles"] = {"first", "corresponding"};
  cfg["thresholds"] = {{"min_support", 1},
                       {"min_articles_volume", 100},
                       {"min_ta_oa", 10},
                       {"license_grace_days", 31},
                       {"audit_k", 10}};
  cfg["seed"] = p.seed;
  cfg["output"] = "out";
  return cfg;
}

/// Writes inputs, a ready-to-run config.json and truth_*.csv files.
inline void write(const Fixture& fx, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw Error(Errc::IoError, "cannot write " + (dir / name).string());
    return os;
  };
  auto table = [&](const std::string& name, const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
    auto os = open(name);
    csv::write_row(os, header);
    for (const auto& r : rows) csv::write_row(os, r);
  };
  for (const auto& [label, recs] : fx.records) {
    auto os = open(label + ".ndjson");
    for (const auto& r : recs) os << to_line(r) << '\n';
    if (auto it = fx.extra_lines.find(label); it != fx.extra_lines.end())
      for (const auto& l : it->second) os << l << '\n';
  }
  table("jct_dump.csv", {"agreement_id", "issn", "org_id", "publisher"}, fx.jct_rows);
  table("esac_durations.csv", {"agreement_id", "start_date", "end_date"}, fx.duration_rows);
  table("issn_links.csv", {"issn", "issn_l"}, fx.link_rows);
  table("institutions.csv", {"org_id", "country", "associated_ids"}, fx.institution_rows);
  table("publisher_aliases.csv", {"alias", "canonical"}, fx.alias_rows);
  {
    auto os = open("doaj.txt");
    os << "issn\n";
    for (const auto& s : fx.doaj) os << s << '\n';
  }
  {
    auto os = open("other_oa.txt");
    for (const auto& s : fx.other_oa_list) os << s << '\n';
  }
  {
    auto os = open("config.json");
    os << default_config(fx.params).dump(2) << '\n';
  }
  {
    auto os = open("truth_labels.csv");
    csv::write_row(os, {"source", "native_id", "countable", "oa", "noisy", "ta_first",
                        "ta_corresponding"});
    for (const auto& [label, m] : fx.truth.copies)
      for (const auto& [id, t] : m)
        csv::write_row(os, {label, id, t.countable ? "1" : "0", t.oa ? "1" : "0",
                            t.noisy ? "1" : "0", t.ta_first ? "1" : "0",
                            t.ta_corresponding ? "1" : "0"});
  }
  {
    auto os = open("truth_crosswalk.csv");
    csv::write_row(os, {"open_id", "scheme", "proprietary_id"});
    for (const auto& [k, v] : fx.truth.crosswalk) csv::write_row(os, {k.first, k.second, v});
  }
}

/// Writes `lines` well-formed article lines for throughput and memory
/// measurements. Journals are drawn from a fixed pool of valid ISSNs.
inline void write_stream(const std::filesystem::path& path, std::size_t lines, std::uint64_t seed,
                         const std::string& source = "open") {
  detail::Rng rng(seed);
  std::vector<Issn> pool;
  for (std::uint32_t j = 0; j < 200; ++j) pool.push_back(detail::make_issn(1234000 + 17 * j));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::IoError, "cannot write " + path.string());
  ArticleRecord r;
  r.source.label = source;
  r.document_class = "journal-article";
  r.license_evidence.push_back({"https://creativecommons.org/licenses/by/4.0/", true, std::nullopt});
  for (std::size_t n = 0; n < lines; ++n) {
    r.native_id = "s-" + std::to_string(n);
    char doi[48];
    std::snprintf(doi, sizeof doi, "10.5555/stream.%09zu", n);
    r.doi = doi;
    r.journal_issn_l = pool[rng.below(pool.size())];
    r.pub_date = detail::random_date(rng, 2019 + static_cast<int>(rng.below(5)));
    r.pagination = std::to_string(1 + n % 900) + "-" + std::to_string(10 + n % 900);
    r.title = "Stream article " + std::to_string(n);
    r.license_evidence.front().start_date = r.pub_date;
    r.authorships.clear();
    Authorship a;
    a.position = 1;
    a.org_ids.insert(OrgId{"ror", "0abcde" + std::to_string(10 + n % 90)});
    a.country_codes.insert(n % 2 ? "DE" : "NL");
    r.authorships.push_back(std::move(a));
    os << to_line(r) << '\n';
  }
}

}  // namespace hoa::fixture
