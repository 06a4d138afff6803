#pragma once

// Decides per article and author role whether open access was enabled by
// a transformative agreement: the journal is covered, an affiliation of
// the role author participates, and publication falls inside the window.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hoa/classify.hpp"
#include "hoa/core_model.hpp"
#include "hoa/ingest.hpp"
#include "hoa/reconcile.hpp"
#include "hoa/support.hpp"

namespace hoa {

struct OrgResolution {
  std::set<std::string> open_ids;
  std::size_t unresolved = 0;
};

/// Open ids pass through, proprietary ids go through the inverted
/// crosswalk, and associated institutions collapse onto their parents.
inline OrgResolution resolve_org(const Authorship& author, const Crosswalk& crosswalk,
                                 const InstitutionIndex& institutions) {
  OrgResolution out;
  std::set<std::string> direct;
  for (const auto& id : author.org_ids) {
    if (id.is_open()) {
      direct.insert(id.value);
      continue;
    }
    const auto& mapped = crosswalk.open_ids_for(id.scheme, id.value);
    if (mapped.empty()) ++out.unresolved;
    direct.insert(mapped.begin(), mapped.end());
  }
  for (const auto& id : direct) {
    auto parents = institutions.resolve(id);
    out.open_ids.insert(parents.begin(), parents.end());
  }
  return out;
}

/// Authors holding a role. Corresponding authors require explicit flags;
/// there is no fallback to the first author.
inline std::vector<const Authorship*> role_authors(const ArticleRecord& r, Role role) {
  std::vector<const Authorship*> out;
  for (const auto& a : r.authorships) {
    if (role == Role::First ? a.is_first() : a.is_corresponding.value_or(false))
      out.push_back(&a);
  }
  return out;
}

/// Agreements sorted by id with a per-journal lookup.
class AgreementIndex {
 public:
  AgreementIndex() = default;
  explicit AgreementIndex(std::vector<Agreement> agreements) : agreements_(std::move(agreements)) {
    std::sort(agreements_.begin(), agreements_.end(),
              [](const Agreement& a, const Agreement& b) { return a.agreement_id < b.agreement_id; });
    for (std::size_t i = 0; i < agreements_.size(); ++i)
      for (const auto& issn : agreements_[i].journal_issn_ls) by_journal_[issn].push_back(i);
  }

  std::vector<const Agreement*> for_journal(const Issn& issn_l) const {
    std::vector<const Agreement*> out;
    if (auto it = by_journal_.find(issn_l); it != by_journal_.end())
      for (auto i : it->second) out.push_back(&agreements_[i]);
    return out;
  }

  const std::vector<Agreement>& all() const { return agreements_; }

 private:
  std::vector<Agreement> agreements_;
  std::map<Issn, std::vector<std::size_t>> by_journal_;
};

struct AttributionContext {
  const AgreementIndex& agreements;
  const Crosswalk& crosswalk;
  const InstitutionIndex& institutions;
};

inline std::set<std::string> resolved_role_orgs(const ArticleRecord& r, Role role,
                                                const AttributionContext& ctx) {
  std::set<std::string> orgs;
  for (const auto* a : role_authors(r, role)) {
    auto res = resolve_org(*a, ctx.crosswalk, ctx.institutions);
    orgs.insert(res.open_ids.begin(), res.open_ids.end());
  }
  return orgs;
}

/// Attribution for a countable hybrid OA article, or nothing when no
/// agreement matches. Overlapping agreements yield one record listing all
/// of them; matched_institution comes from the first agreement by id.
inline std::optional<AttributionRecord> match_agreements(const ClassifiedArticle& article,
                                                         Role role,
                                                         const AttributionContext& ctx) {
  if (!article.countable || !article.is_hybrid_oa) return std::nullopt;
  const auto& r = article.record;
  auto candidates = ctx.agreements.for_journal(r.journal_issn_l);
  if (candidates.empty()) return std::nullopt;
  auto orgs = resolved_role_orgs(r, role, ctx);
  if (orgs.empty()) return std::nullopt;

  AttributionRecord out{r.source, r.native_id, r.doi, article.year, role, {}, {}};
  for (const auto* a : candidates) {
    if (!a->window.contains(r.pub_date)) continue;
    for (const auto& org : orgs) {
      if (!a->institution_ids.count(org)) continue;
      if (out.agreement_ids.empty()) out.matched_institution = org;
      out.agreement_ids.insert(a->agreement_id);
      break;
    }
  }
  if (out.agreement_ids.empty()) return std::nullopt;
  return out;
}

/// One row per countable hybrid OA article, in corpus order; rows without a
/// matching agreement carry an empty agreement set.
inline std::vector<AttributionRecord> attribute_corpus(std::span<const ClassifiedArticle> corpus,
                                                       Role role, const AttributionContext& ctx,
                                                       unsigned workers = 1) {
  std::vector<std::vector<AttributionRecord>> shards(shard_count(corpus.size(), workers));
  parallel_shards(corpus.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& c = corpus[i];
      if (!c.is_hybrid_oa) continue;
      if (auto m = match_agreements(c, role, ctx)) {
        shards[s].push_back(std::move(*m));
      } else {
        shards[s].push_back(
            AttributionRecord{c.record.source, c.record.native_id, c.record.doi, c.year, role, {}, {}});
      }
    }
  });
  std::vector<AttributionRecord> out;
  for (auto& s : shards) std::move(s.begin(), s.end(), std::back_inserter(out));
  return out;
}

/// Per-clause outcome for one candidate agreement, for explain output.
struct ClauseCheck {
  std::string agreement_id;
  bool journal = false;
  bool institution = false;
  bool window = false;

  bool passed() const { return journal && institution && window; }
};

/// Every agreement passing the journal or the institution clause.
inline std::vector<ClauseCheck> check_clauses(const ArticleRecord& r, Role role,
                                              const AttributionContext& ctx) {
  auto orgs = resolved_role_orgs(r, role, ctx);
  std::vector<ClauseCheck> out;
  for (const auto& a : ctx.agreements.all()) {
    ClauseCheck c{a.agreement_id, a.journal_issn_ls.count(r.journal_issn_l) > 0, false,
                  a.window.contains(r.pub_date)};
    for (const auto& o : orgs) c.institution = c.institution || a.institution_ids.count(o) > 0;
    if (c.journal || c.institution) out.push_back(c);
  }
  return out;
}

}  // namespace hoa
