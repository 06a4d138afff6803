#pragma once

// Crosswalk between open organisation identifiers and a proprietary
// identifier scheme, learned from first-author affiliations of articles
// that both sources index under the same DOI.

#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hoa/classify.hpp"
#include "hoa/core_model.hpp"
#include "hoa/support.hpp"

namespace hoa {

inline const ArticleRecord& record_of(const ArticleRecord& r) { return r; }
inline const ArticleRecord& record_of(const ClassifiedArticle& c) { return c.record; }

/// DOI-keyed pairing of one open and one proprietary record (indices into
/// the corpora passed to build_bridge).
struct Bridge {
  std::map<std::string, std::pair<std::size_t, std::size_t>> pairs;
  /// DOIs seen more than once in either corpus.
  std::vector<std::string> ambiguous;
};

template <typename OpenRec, typename PropRec>
Bridge build_bridge(std::span<const OpenRec> open, std::span<const PropRec> prop) {
  auto index = [](auto corpus) {
    std::map<std::string, std::vector<std::size_t>> by_doi;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (const auto& doi = record_of(corpus[i]).doi) by_doi[*doi].push_back(i);
    return by_doi;
  };
  auto a = index(open);
  auto b = index(prop);
  Bridge bridge;
  std::set<std::string> ambiguous;
  for (const auto& [doi, ids] : a)
    if (ids.size() > 1) ambiguous.insert(doi);
  for (const auto& [doi, ids] : b)
    if (ids.size() > 1) ambiguous.insert(doi);
  for (const auto& [doi, ids] : a) {
    if (ambiguous.count(doi)) continue;
    auto it = b.find(doi);
    if (it == b.end()) continue;
    bridge.pairs.emplace(doi, std::make_pair(ids.front(), it->second.front()));
  }
  bridge.ambiguous.assign(ambiguous.begin(), ambiguous.end());
  return bridge;
}

template <typename OpenRec, typename PropRec>
Bridge build_bridge(const std::vector<OpenRec>& open, const std::vector<PropRec>& prop) {
  return build_bridge(std::span<const OpenRec>(open), std::span<const PropRec>(prop));
}

struct PairTally {
  std::string open_id;
  std::string scheme;
  std::string proprietary_id;
  std::uint64_t count = 0;
  /// Smallest supporting DOI, for audit output.
  std::string example_doi;

  friend bool operator==(const PairTally&, const PairTally&) = default;
};

/// Mergeable pair counter. Merging is commutative, so shards can be summed
/// in any order.
class TallyMap {
 public:
  using Key = std::tuple<std::string, std::string, std::string>;

  void add(const std::string& open_id, const std::string& scheme, const std::string& prop_id,
           const std::string& doi, std::uint64_t n = 1) {
    auto& v = counts_[Key{open_id, scheme, prop_id}];
    v.first += n;
    if (v.second.empty() || doi < v.second) v.second = doi;
  }

  void merge(const TallyMap& other) {
    for (const auto& [k, v] : other.counts_)
      add(std::get<0>(k), std::get<1>(k), std::get<2>(k), v.second, v.first);
  }

  std::vector<PairTally> tallies() const {
    std::vector<PairTally> out;
    out.reserve(counts_.size());
    for (const auto& [k, v] : counts_)
      out.push_back(PairTally{std::get<0>(k), std::get<1>(k), std::get<2>(k), v.first, v.second});
    return out;
  }

  std::size_t size() const { return counts_.size(); }

 private:
  std::map<Key, std::pair<std::uint64_t, std::string>> counts_;
};

namespace detail {

inline const Authorship* first_author(const ArticleRecord& r) {
  for (const auto& a : r.authorships)
    if (a.is_first()) return &a;
  return nullptr;
}

}  // namespace detail

/// For each bridged article, every combination of the first author's open
/// ids with the first author's ids in `scheme` counts once.
template <typename OpenRec, typename PropRec>
std::vector<PairTally> tally_pairs(const Bridge& bridge, std::span<const OpenRec> open,
                                   std::span<const PropRec> prop, const std::string& scheme,
                                   unsigned workers = 1) {
  std::vector<const std::pair<const std::string, std::pair<std::size_t, std::size_t>>*> items;
  items.reserve(bridge.pairs.size());
  for (const auto& p : bridge.pairs) items.push_back(&p);

  std::vector<TallyMap> shards(shard_count(items.size(), workers));
  parallel_shards(items.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& [doi, idx] = *items[i];
      const auto* fa = detail::first_author(record_of(open[idx.first]));
      const auto* fb = detail::first_author(record_of(prop[idx.second]));
      if (!fa || !fb) continue;
      for (const auto& o : fa->org_ids) {
        if (!o.is_open()) continue;
        for (const auto& p : fb->org_ids)
          if (p.scheme == scheme) shards[s].add(o.value, scheme, p.value, doi);
      }
    }
  });
  TallyMap total;
  for (const auto& s : shards) total.merge(s);
  return total.tallies();
}

template <typename OpenRec, typename PropRec>
std::vector<PairTally> tally_pairs(const Bridge& bridge, const std::vector<OpenRec>& open,
                                   const std::vector<PropRec>& prop, const std::string& scheme,
                                   unsigned workers = 1) {
  return tally_pairs(bridge, std::span<const OpenRec>(open), std::span<const PropRec>(prop),
                     scheme, workers);
}

/// A finalised crosswalk: at most one proprietary id per (open id, scheme).
class Crosswalk {
 public:
  Crosswalk() = default;
  explicit Crosswalk(std::vector<CrosswalkEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
    for (const auto& e : entries_) inverse_[{e.scheme, e.proprietary_id}].insert(e.open_id);
  }

  const std::vector<CrosswalkEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Open ids mapped onto a proprietary id; possibly several.
  const std::set<std::string>& open_ids_for(const std::string& scheme,
                                            const std::string& prop_id) const {
    static const std::set<std::string> none;
    auto it = inverse_.find({scheme, prop_id});
    return it == inverse_.end() ? none : it->second;
  }

  const CrosswalkEntry* find(const std::string& open_id, const std::string& scheme) const {
    for (const auto& e : entries_)
      if (e.open_id == open_id && e.scheme == scheme) return &e;
    return nullptr;
  }

 private:
  std::vector<CrosswalkEntry> entries_;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> inverse_;
};

/// Per (open id, scheme) the most frequent proprietary id wins, ties going
/// to the lexicographically smallest. Winners below min_support are
/// dropped.
inline Crosswalk select_crosswalk(std::span<const PairTally> tallies,
                                  std::uint64_t min_support = 1) {
  std::map<std::pair<std::string, std::string>, const PairTally*> best;
  for (const auto& t : tallies) {
    auto& b = best[{t.open_id, t.scheme}];
    if (!b || t.count > b->count || (t.count == b->count && t.proprietary_id < b->proprietary_id))
      b = &t;
  }
  std::vector<CrosswalkEntry> entries;
  for (const auto& [key, t] : best) {
    if (t->count < min_support) continue;
    entries.push_back(CrosswalkEntry{t->open_id, t->scheme, t->proprietary_id, t->count});
  }
  return Crosswalk(std::move(entries));
}

inline Crosswalk select_crosswalk(const std::vector<PairTally>& tallies,
                                  std::uint64_t min_support = 1) {
  return select_crosswalk(std::span<const PairTally>(tallies), min_support);
}

/// Uniform integer in [0, bound) from a 64-bit engine, by rejection so the
/// result is identical on every standard library.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Uniform sample of k entries without replacement, reproducible for a
/// seed. Returned in sampling order.
inline std::vector<CrosswalkEntry> audit_sample(const Crosswalk& crosswalk, std::size_t k,
                                                std::uint64_t seed) {
  const auto& all = crosswalk.entries();
  if (k > all.size())
    throw Error(Errc::SampleTooLarge,
                std::to_string(k) + " requested from " + std::to_string(all.size()));
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::vector<CrosswalkEntry> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(all[idx[i]]);
  }
  return out;
}

/// Supporting DOI for each sampled pair, looked up from the tallies.
inline std::vector<std::string> example_dois(const std::vector<CrosswalkEntry>& sample,
                                             std::span<const PairTally> tallies) {
  std::map<std::tuple<std::string, std::string, std::string>, std::string> lookup;
  for (const auto& t : tallies) lookup[{t.open_id, t.scheme, t.proprietary_id}] = t.example_doi;
  std::vector<std::string> out;
  for (const auto& e : sample) {
    auto it = lookup.find({e.open_id, e.scheme, e.proprietary_id});
    out.push_back(it == lookup.end() ? std::string() : it->second);
  }
  return out;
}

}  // namespace hoa
