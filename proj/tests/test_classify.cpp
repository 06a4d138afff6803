#include <gtest/gtest.h>

#include "hoa/classify.hpp"
#include "hoa/fixture.hpp"
#include "test_util.hpp"

using namespace hoa;
using testutil::ymd;

namespace {

ArticleRecord record(const std::string& cls, std::optional<std::string> pages = "1-10") {
  ArticleRecord r;
  r.source.label = "open";
  r.native_id = "x";
  r.journal_issn_l = Issn::parse("0378-5955");
  r.pub_date = ymd(2021, 6, 1);
  r.document_class = cls;
  r.pagination = std::move(pages);
  r.title = "A study of hybrid journals";
  return r;
}

LicenseStatement cc(std::optional<Date> start = std::nullopt) {
  return {"https://creativecommons.org/licenses/by/4.0/", true, start};
}

}  // namespace

TEST(HybridJournal, FullyOaListsByIssnLOrVariant) {
  Journal j{Issn::parse("1234-5679"), {Issn::parse("1234-5679"), Issn::parse("0378-5955")}, "Wiley", true, ""};
  EXPECT_TRUE(is_hybrid_journal(j, {}));
  EXPECT_FALSE(is_hybrid_journal(j, {Issn::parse("1234-5679")}));
  EXPECT_FALSE(is_hybrid_journal(j, {Issn::parse("0378-5955")}));
  EXPECT_TRUE(is_hybrid_journal(j, {Issn::parse("2049-3630")}));
}

TEST(JournalIndex, BuiltFromListingsWithFlags) {
  IssnLinkTable links;
  links.insert(Issn::parse("0378-5955"), Issn::parse("1234-5679"));
  std::vector<AgreementListing> listings = {{"a", "Wiley", {Issn::parse("1234-5679")}, {}},
                                            {"b", "Elsevier", {Issn::parse("1234-5679"), Issn::parse("2049-3630")}, {}}};
  auto idx = build_journal_index(listings, links, {Issn::parse("2049-3630")});
  ASSERT_EQ(idx.size(), 2u);
  EXPECT_EQ(idx.at(Issn::parse("1234-5679")).publisher, "Elsevier");
  EXPECT_TRUE(idx.at(Issn::parse("1234-5679")).is_hybrid);
  EXPECT_EQ(idx.at(Issn::parse("1234-5679")).issn_variants.size(), 2u);
  EXPECT_FALSE(idx.at(Issn::parse("2049-3630")).is_hybrid);
}

TEST(AssignYear, EarliestDate) {
  std::vector<Date> dates = {ymd(2022, 1, 2), ymd(2021, 12, 30)};
  EXPECT_EQ(assign_year(dates), 2021);
  std::vector<Date> one = {ymd(2020, 5, 1)};
  EXPECT_EQ(assign_year(one), 2020);
  std::vector<Date> pinned = {parse_date("2019")};
  EXPECT_EQ(assign_year(pinned), 2019);
  EXPECT_THROW(assign_year(std::span<const Date>{}), Error);
}

TEST(Paratext, DefaultPatterns) {
  for (const char* t : {"Editorial Board", "Issue Information", "FRONT MATTER", "  table   of contents ",
                        "Editorial Board - Volume 12", "Issue Information: Vol. 3, No. 2", "Masthead",
                        "Acknowledgement to Reviewers", "Reviewer acknowledgements", "Cover Image", "Index",
                        "Back matter", "List of reviewers"})
    EXPECT_TRUE(detect_paratext(t)) << t;
  for (const char* t : {"A study of hybrid journals", "", "Editorial board diversity in economics",
                        "Index of multiple deprivation and health", "Covering the costs"})
    EXPECT_FALSE(detect_paratext(t)) << t;
}

TEST(Paratext, LoadsPatternFile) {
  testutil::TempDir d;
  auto m = ParatextMatcher::from_file(d.write("p.txt", "# comment\nfront matter\n\nin this issue\n"));
  EXPECT_TRUE(m.matches("In This Issue"));
  EXPECT_FALSE(m.matches("Editorial Board"));
  EXPECT_THROW(ParatextMatcher::from_file(d.write("bad.txt", "(unclosed\n")), Error);
}

TEST(RegularIssue, NumericPaginationOrENumber) {
  EXPECT_TRUE(in_regular_issue(record("a", "123-130")));
  EXPECT_FALSE(in_regular_issue(record("a", "S12-S20")));
  auto e = record("a", std::nullopt);
  e.article_number = "104832";
  EXPECT_TRUE(in_regular_issue(e));
  e.article_number = "e104832";
  EXPECT_FALSE(in_regular_issue(e));
  e.article_number.reset();
  EXPECT_FALSE(in_regular_issue(e));
}

TEST(Original, AllowlistMode) {
  SourcePolicy p;
  ParatextMatcher m;
  bool unknown = false;
  EXPECT_TRUE(is_original(record("Review"), p, m, &unknown));
  EXPECT_TRUE(is_original(record("Article"), p, m, &unknown));
  EXPECT_FALSE(is_original(record("Meeting Abstract"), p, m, &unknown));
  EXPECT_FALSE(unknown);
  EXPECT_FALSE(is_original(record("Mystery Item"), p, m, &unknown));
  EXPECT_TRUE(unknown);
}

TEST(Original, HeuristicMode) {
  SourcePolicy p;
  p.mode = ClassMode::Heuristic;
  ParatextMatcher m;
  EXPECT_TRUE(is_original(record("journal-article"), p, m));
  auto fm = record("journal-article");
  fm.title = "Front Matter";
  EXPECT_FALSE(is_original(fm, p, m));
  EXPECT_FALSE(is_original(record("journal-article", "S1-S4"), p, m));
  EXPECT_FALSE(is_original(record("book-chapter"), p, m));
}

TEST(OaStatus, CcOnVersionOfRecordWithinGrace) {
  LicenseRules rules;
  auto r = record("a");
  EXPECT_FALSE(oa_status(r, rules));
  r.license_evidence = {cc()};
  EXPECT_TRUE(oa_status(r, rules));
  r.license_evidence = {{"https://www.elsevier.com/tdm/userlicense/1.0/", true, r.pub_date}};
  EXPECT_FALSE(oa_status(r, rules));
  r.license_evidence = {cc(add_days(r.pub_date, 730))};
  EXPECT_FALSE(oa_status(r, rules));
  r.license_evidence = {cc(add_days(r.pub_date, 31))};
  EXPECT_TRUE(oa_status(r, rules));
  r.license_evidence = {cc(add_days(r.pub_date, 32))};
  EXPECT_FALSE(oa_status(r, rules));
  r.license_evidence = {{"https://creativecommons.org/licenses/by/4.0/", false, std::nullopt}};
  EXPECT_FALSE(oa_status(r, rules));
}

TEST(OaStatus, EmulationCountsDelayedAndBronze) {
  LicenseRules rules;
  auto r = record("a");
  r.license_evidence = {cc(add_days(r.pub_date, 730))};
  EXPECT_TRUE(oa_status(r, rules, true));
  r.license_evidence = {{"https://www.wiley.com/open-access/userlicense/1.0/", true, add_days(r.pub_date, 365)}};
  EXPECT_TRUE(oa_status(r, rules, true));
  r.license_evidence = {{"https://www.wiley.com/tdm/textmining/1.0/", false, r.pub_date}};
  EXPECT_FALSE(oa_status(r, rules, true));
}

TEST(Classify, CountableInvariantsHold) {
  JournalIndex journals;
  journals.emplace(Issn::parse("0378-5955"), Journal{Issn::parse("0378-5955"), {}, "Wiley", true, ""});
  journals.emplace(Issn::parse("2049-3630"), Journal{Issn::parse("2049-3630"), {}, "Wiley", false, ""});
  ClassifyConfig cfg;
  cfg.policies[SourceId{"open"}].mode = ClassMode::Heuristic;
  std::vector<ArticleRecord> rs;
  for (std::string cls : {"journal-article", "Article", "other"})
    for (std::string issn : {"0378-5955", "2049-3630", "1234-5679"})
      for (std::string title : {"Plain", "Issue Information"})
        for (std::string pages : {"1-2", "S1"})
          for (bool lic : {false, true})
            for (std::string src : {"open", "srcA"}) {
              auto r = record(cls, pages);
              r.source.label = src;
              r.journal_issn_l = Issn::parse(issn);
              r.title = title;
              if (lic) r.license_evidence = {cc()};
              rs.push_back(r);
            }
  for (const auto& r : rs) {
    auto c = classify(r, journals, cfg);
    EXPECT_EQ(c.countable, c.is_original && !c.is_paratext && c.in_regular_issue && c.journal_hybrid);
    EXPECT_TRUE(!c.is_hybrid_oa || c.countable);
    EXPECT_TRUE(!c.countable || c.is_original);
    EXPECT_EQ(c.year, 2021);
    auto again = classify(r, journals, cfg);
    EXPECT_EQ(again.countable, c.countable);
    EXPECT_EQ(again.is_hybrid_oa, c.is_hybrid_oa);
  }
}

TEST(Classify, PlantedLabelsRecoveredExactly) {
  fixture::Params p;
  p.articles = 3000;
  p.withhold_cc_publisher = "Emerald";
  p.delayed_oa_publisher = "Elsevier";
  auto fx = fixture::generate(p);
  IssnLinkTable links;
  for (const auto& row : fx.link_rows) links.insert(Issn::parse(row[0]), Issn::parse(row[1]));
  RejectLog rejects;
  testutil::TempDir d;
  std::string jct = "agreement_id,issn,org_id,publisher\n";
  for (const auto& r : fx.jct_rows) jct += r[0] + "," + r[1] + "," + r[2] + "," + r[3] + "\n";
  auto listings = load_agreement_dump(d.write("jct.csv", jct), links, PublisherAliases::defaults(), rejects);
  std::set<Issn> fully_oa;
  for (const auto& s : fx.doaj) fully_oa.insert(links.resolve(Issn::parse(s)));
  for (const auto& s : fx.other_oa_list) fully_oa.insert(links.resolve(Issn::parse(s)));
  auto journals = build_journal_index(listings, links, fully_oa);

  ClassifyConfig cfg;
  cfg.policies[SourceId{"open"}].mode = ClassMode::Heuristic;
  std::size_t checked = 0;
  for (const auto& [label, recs] : fx.records) {
    for (auto r : recs) {
      r.journal_issn_l = links.resolve(r.journal_issn_l);
      auto c = classify(r, journals, cfg);
      const auto& t = fx.truth.copies.at(label).at(r.native_id);
      ASSERT_EQ(c.countable, t.countable) << label << " " << r.native_id;
      ASSERT_EQ(c.is_hybrid_oa, t.oa) << label << " " << r.native_id;
      if (label == "open") {
        ASSERT_EQ(c.is_paratext, t.paratext) << r.native_id;
        ASSERT_EQ(!c.in_regular_issue, t.supplement) << r.native_id;
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 5000u);
}
