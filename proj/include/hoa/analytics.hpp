#pragma once

// Aggregation of classified and attributed articles into indicator rows,
// cross-source coverage intersections and rank correlations.

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hoa/attribute.hpp"
#include "hoa/classify.hpp"
#include "hoa/core_model.hpp"
#include "hoa/support.hpp"

namespace hoa {

using Corpora = std::map<SourceId, std::vector<ClassifiedArticle>>;
using Membership = std::set<SourceId>;

// ---------------------------------------------------------------------------
// Coverage intersections

/// A journal belongs to a source iff that source has at least one countable
/// OA article for it inside the year window.
inline std::map<Issn, Membership> journal_universe(const Corpora& corpora, YearRange years) {
  std::map<Issn, Membership> universe;
  for (const auto& [source, corpus] : corpora)
    for (const auto& c : corpus)
      if (c.is_hybrid_oa && years.contains(c.year)) universe[c.record.journal_issn_l].insert(source);
  return universe;
}

struct IntersectionSet {
  Membership membership;
  std::size_t n_journals = 0;
  /// DOIs of countable articles present in every member source.
  std::size_t n_articles_shared = 0;
  /// DOIs of countable open-source articles found in no other source; zero
  /// for sets without the open source.
  std::size_t n_articles_surplus_open = 0;
  std::vector<Issn> journals;
};

inline std::string membership_label(const Membership& m) {
  std::string out;
  for (const auto& s : m) {
    if (!out.empty()) out.push_back('&');
    out += s.label;
  }
  return out;
}

/// Countable in-window DOIs per source and journal.
inline std::map<SourceId, std::map<Issn, std::set<std::string>>> countable_dois(
    const Corpora& corpora, YearRange years) {
  std::map<SourceId, std::map<Issn, std::set<std::string>>> out;
  for (const auto& [source, corpus] : corpora) {
    auto& per = out[source];
    for (const auto& c : corpus)
      if (c.countable && years.contains(c.year) && c.record.doi)
        per[c.record.journal_issn_l].insert(*c.record.doi);
  }
  return out;
}

/// Exclusive intersection sets, one per occupied membership combination,
/// ordered by membership. No display threshold is applied here.
inline std::vector<IntersectionSet> upset_sets(const std::map<Issn, Membership>& universe,
                                               const Corpora& corpora, const SourceId& open,
                                               YearRange years) {
  auto dois = countable_dois(corpora, years);
  std::map<Membership, IntersectionSet> sets;
  for (const auto& [issn, membership] : universe) {
    auto& set = sets[membership];
    set.membership = membership;
    ++set.n_journals;
    set.journals.push_back(issn);

    auto dois_of = [&](const SourceId& s) -> const std::set<std::string>* {
      auto it = dois.find(s);
      if (it == dois.end()) return nullptr;
      auto jt = it->second.find(issn);
      return jt == it->second.end() ? nullptr : &jt->second;
    };

    const auto* first = dois_of(*membership.begin());
    if (first) {
      for (const auto& d : *first) {
        bool everywhere = true;
        for (const auto& s : membership) {
          const auto* ds = dois_of(s);
          if (!ds || !ds->count(d)) {
            everywhere = false;
            break;
          }
        }
        set.n_articles_shared += everywhere;
      }
    }
    if (membership.count(open)) {
      if (const auto* od = dois_of(open)) {
        for (const auto& d : *od) {
          bool elsewhere = false;
          for (const auto& [s, per] : dois) {
            if (s == open) continue;
            const auto* ds = dois_of(s);
            if (ds && ds->count(d)) {
              elsewhere = true;
              break;
            }
          }
          set.n_articles_surplus_open += !elsewhere;
        }
      }
    }
  }
  std::vector<IntersectionSet> out;
  for (auto& [m, s] : sets) out.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Indicators

/// Country codes of the role authors of an article, each once.
inline std::set<std::string> role_countries(const ArticleRecord& r, Role role) {
  std::set<std::string> out;
  for (const auto* a : role_authors(r, role)) out.insert(a->country_codes.begin(), a->country_codes.end());
  return out;
}

/// Rows keyed by (year, source, role, group). Country rows use full
/// counting over the role author's distinct countries; publisher and
/// global rows count each article once. Only articles in hybrid journals
/// inside the year window enter.
inline std::vector<IndicatorRow> aggregate(std::span<const ClassifiedArticle> corpus,
                                           const std::set<std::string>& ta_enabled_ids,
                                           const JournalIndex& journals, GroupKind kind, Role role,
                                           YearRange years, unsigned workers = 1) {
  using Key = std::tuple<int, std::string, std::string>;
  using Counts = std::map<Key, IndicatorRow>;
  std::vector<Counts> shards(shard_count(corpus.size(), workers));

  parallel_shards(corpus.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    auto& counts = shards[s];
    for (std::size_t i = begin; i < end; ++i) {
      const auto& c = corpus[i];
      if (!c.journal_hybrid || !years.contains(c.year)) continue;
      std::vector<std::string> groups;
      switch (kind) {
        case GroupKind::Global: groups.push_back("all"); break;
        case GroupKind::Publisher: {
          auto it = journals.find(c.record.journal_issn_l);
          groups.push_back(it == journals.end() || it->second.publisher.empty()
                               ? std::string("unknown")
                               : it->second.publisher);
          break;
        }
        case GroupKind::Country: {
          auto cs = role_countries(c.record, role);
          groups.assign(cs.begin(), cs.end());
          break;
        }
      }
      bool ta = c.is_hybrid_oa && ta_enabled_ids.count(c.record.native_id) > 0;
      for (const auto& g : groups) {
        auto& row = counts[Key{c.year, c.record.source.label, g}];
        row.year = c.year;
        row.source = c.record.source;
        row.role = role;
        row.group_kind = kind;
        row.group_key = g;
        ++row.n_total;
        row.n_original += c.countable;
        row.n_oa += c.is_hybrid_oa;
        row.n_ta_oa += ta;
      }
    }
  });

  Counts merged;
  for (const auto& shard : shards) {
    for (const auto& [k, r] : shard) {
      auto [it, fresh] = merged.try_emplace(k, r);
      if (fresh) continue;
      it->second.n_total += r.n_total;
      it->second.n_original += r.n_original;
      it->second.n_oa += r.n_oa;
      it->second.n_ta_oa += r.n_ta_oa;
    }
  }
  std::vector<IndicatorRow> out;
  out.reserve(merged.size());
  for (auto& [k, r] : merged) out.push_back(std::move(r));
  return out;
}

/// Sums rows over years per group key.
inline std::map<std::string, IndicatorRow> totals_by_group(std::span<const IndicatorRow> rows) {
  std::map<std::string, IndicatorRow> out;
  for (const auto& r : rows) {
    auto [it, fresh] = out.try_emplace(r.group_key, r);
    if (fresh) {
      it->second.year = 0;
      continue;
    }
    it->second.n_total += r.n_total;
    it->second.n_original += r.n_original;
    it->second.n_oa += r.n_oa;
    it->second.n_ta_oa += r.n_ta_oa;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coverage accounting

struct CoverageRow {
  SourceId source;
  std::size_t active_journals = 0;
  std::size_t active_journals_original = 0;
  std::size_t active_journals_original_oa = 0;
  std::size_t total_articles = 0;
  std::size_t original_articles = 0;
  std::size_t articles_with_doi = 0;
  std::size_t original_articles_with_doi = 0;
  std::size_t oa_articles = 0;
  std::size_t original_oa_articles = 0;
  std::size_t first_author_articles = 0;
  std::size_t corresponding_author_articles = 0;
};

inline CoverageRow coverage(const SourceId& source, std::span<const ClassifiedArticle> corpus,
                            YearRange years) {
  CoverageRow row{source};
  std::set<Issn> active, active_orig, active_oa;
  auto has_affiliation = [](const ArticleRecord& r, Role role) {
    for (const auto* a : role_authors(r, role))
      if (!a->org_ids.empty()) return true;
    return false;
  };
  for (const auto& c : corpus) {
    if (!c.journal_hybrid || !years.contains(c.year)) continue;
    const auto& issn = c.record.journal_issn_l;
    bool doi = c.record.doi.has_value();
    active.insert(issn);
    ++row.total_articles;
    row.articles_with_doi += doi;
    row.oa_articles += c.has_oa_evidence;
    if (!c.countable) continue;
    active_orig.insert(issn);
    ++row.original_articles;
    row.original_articles_with_doi += doi;
    if (c.is_hybrid_oa) {
      active_oa.insert(issn);
      ++row.original_oa_articles;
    }
    row.first_author_articles += has_affiliation(c.record, Role::First);
    row.corresponding_author_articles += has_affiliation(c.record, Role::Corresponding);
  }
  row.active_journals = active.size();
  row.active_journals_original = active_orig.size();
  row.active_journals_original_oa = active_oa.size();
  return row;
}

// ---------------------------------------------------------------------------
// Rank correlation

/// 1-based fractional ranks; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) throw Error(Errc::ZeroVariance, "constant ranks");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Spearman's rho over paired observations.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::InsufficientPairs, "unequal lengths");
  if (x.size() < 2) throw Error(Errc::InsufficientPairs, std::to_string(x.size()) + " pairs");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Keys present in both metrics are paired. With `filter_counts`, a key is
/// kept only when its count is at least min_count (missing keys count 0).
inline CorrelationResult spearman(const std::map<std::string, double>& x,
                                  const std::map<std::string, double>& y,
                                  const std::map<std::string, double>* filter_counts = nullptr,
                                  double min_count = 0) {
  std::vector<double> xs, ys;
  for (const auto& [k, v] : x) {
    auto it = y.find(k);
    if (it == y.end()) continue;
    if (filter_counts) {
      auto ft = filter_counts->find(k);
      if ((ft == filter_counts->end() ? 0.0 : ft->second) < min_count) continue;
    }
    xs.push_back(v);
    ys.push_back(it->second);
  }
  CorrelationResult out;
  out.n = xs.size();
  out.filter_threshold = min_count;
  out.rho = spearman_rho(xs, ys);
  return out;
}

}  // namespace hoa
