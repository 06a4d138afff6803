#include <gtest/gtest.h>

#include <sys/wait.h>

#include "hoa/fixture.hpp"
#include "hoa/pipeline.hpp"
#include "test_util.hpp"

using namespace hoa;
using namespace hoa::pipeline;
namespace fs = std::filesystem;

namespace {

fixture::Fixture small_fixture(const fs::path& dir) {
  fixture::Params p;
  p.articles = 1500;
  p.journals = 20;
  auto fx = fixture::generate(p);
  fixture::write(fx, dir);
  return fx;
}

PipelineConfig config_in(const fs::path& dir, const std::string& out, unsigned workers) {
  auto cfg = load_config(dir / "config.json");
  cfg.output = out;
  cfg.workers = workers;
  return cfg;
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testutil::slurp(e.path());
  return out;
}

int run_cli(const std::string& args) {
  int status = std::system((std::string(HOA_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::IoError;
}

}  // namespace

TEST(Config, YearsAndStages) {
  EXPECT_EQ(parse_years("2019:2023"), (YearRange{2019, 2023}));
  EXPECT_THROW(parse_years("2023:2019"), Error);
  EXPECT_THROW(parse_years("2019"), Error);
  EXPECT_EQ(parse_stages("compare,ingest"), (std::vector<Stage>{Stage::Ingest, Stage::Compare}));
  EXPECT_THROW(parse_stages("ingest,bogus"), Error);
}

TEST(Config, ValidationRejectsBadConfigs) {
  testutil::TempDir d;
  small_fixture(d.path());
  auto base = load_config(d.path() / "config.json");
  EXPECT_NO_THROW(base.validate());

  auto two_open = base;
  two_open.sources[1].open = true;
  two_open.sources[1].scheme = "ror";
  EXPECT_EQ(code_of([&] { two_open.validate(); }), Errc::ConfigError);

  auto dup = base;
  dup.sources[2].id.label = dup.sources[1].id.label;
  EXPECT_EQ(code_of([&] { dup.validate(); }), Errc::ConfigError);

  auto missing = base;
  missing.sources[0].articles = "nope.ndjson";
  EXPECT_EQ(code_of([&] { missing.validate(); }), Errc::ConfigError);

  auto no_durations = base;
  no_durations.durations.clear();
  EXPECT_EQ(code_of([&] { no_durations.validate(); }), Errc::ConfigError);

  auto no_roles = base;
  no_roles.roles.clear();
  EXPECT_EQ(code_of([&] { no_roles.validate(); }), Errc::ConfigError);

  EXPECT_EQ(code_of([&] { parse_config(nlohmann::json::parse(R"({"years":"2019:2020"})"), d.path()); }),
            Errc::ConfigError);
  EXPECT_EQ(code_of([&] { load_config(d.write("bad.json", "{")); }), Errc::ConfigError);
}

TEST(Config, DigestIgnoresOutputAndWorkers) {
  testutil::TempDir d;
  small_fixture(d.path());
  auto a = config_in(d.path(), "x", 1);
  auto b = config_in(d.path(), "y", 8);
  EXPECT_EQ(a.digest(), b.digest());
  b.thresholds.min_support = 3;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(Pipeline, FullRunProducesArtifactsAndManifests) {
  testutil::TempDir d;
  small_fixture(d.path());
  auto cfg = config_in(d.path(), "out", 2);
  run(cfg, {std::begin(kAllStages), std::end(kAllStages)});
  auto out = cfg.out_dir();
  for (const char* f : {"corpus_open.ndjson", "corpus_srcA.ndjson", "rejects_srcB.csv", "agreements.csv",
                        "journals.csv", "classified_open.csv", "crosswalk.csv", "audit_sample.csv",
                        "bridge_ambiguous.csv", "attributions.csv", "indicators.csv", "intersections.csv",
                        "coverage.csv", "plot_fig2_journals.csv", "plot_fig3_publishers.csv",
                        "plot_fig4_uptake.csv", "correlations.csv", "plot_fig5_countries.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  for (auto s : kAllStages) {
    auto path = out / ("manifest_" + std::string(stage_name(s)) + ".json");
    ASSERT_TRUE(fs::exists(path));
    auto m = nlohmann::json::parse(testutil::slurp(path));
    EXPECT_EQ(m["config_digest"], cfg.digest());
    for (const auto& o : m["outputs"])
      EXPECT_EQ(o["digest"], file_digest((out / o["artifact"].get<std::string>()).string()));
  }
  auto ingest = nlohmann::json::parse(testutil::slurp(out / "manifest_ingest.json"));
  for (const auto& s : cfg.sources) {
    const auto& c = ingest["counts"][s.id.label];
    EXPECT_EQ(c["input_lines"].get<std::size_t>(), c["records"].get<std::size_t>() + c["rejects"].get<std::size_t>());
    EXPECT_EQ(c["rejects"], 4);
  }
}

TEST(Pipeline, DeterministicAcrossRerunsAndWorkers) {
  testutil::TempDir d;
  small_fixture(d.path());
  std::vector<std::map<std::string, std::string>> runs;
  for (auto [name, w] : std::vector<std::pair<std::string, unsigned>>{{"w1", 1}, {"w2", 2}, {"w8", 8}, {"again", 8}}) {
    auto cfg = config_in(d.path(), name, w);
    run(cfg, {std::begin(kAllStages), std::end(kAllStages)});
    runs.push_back(outputs(cfg.out_dir()));
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    ASSERT_EQ(runs[i].size(), runs[0].size());
    for (const auto& [name, content] : runs[0]) EXPECT_EQ(runs[i].at(name), content) << name;
  }
}

TEST(Pipeline, StagesRunSeparatelyMatchFullRun) {
  testutil::TempDir d;
  small_fixture(d.path());
  auto full = config_in(d.path(), "full", 2);
  run(full, {std::begin(kAllStages), std::end(kAllStages)});
  auto split = config_in(d.path(), "split", 2);
  for (auto s : kAllStages) run(split, {s});
  EXPECT_EQ(outputs(full.out_dir()), outputs(split.out_dir()));
}

TEST(Pipeline, MissingUpstreamIsDependencyError) {
  testutil::TempDir d;
  small_fixture(d.path());
  auto cfg = config_in(d.path(), "out", 1);
  try {
    run(cfg, {Stage::Aggregate});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), Stage::Aggregate);
    EXPECT_EQ(e.code(), Errc::DependencyError);
  }
}

TEST(Explain, TracesAttributedBronzeAndUnknown) {
  testutil::TempDir d;
  auto fx = small_fixture(d.path());
  auto cfg = config_in(d.path(), "out", 2);
  run(cfg, {Stage::Ingest, Stage::Classify, Stage::Reconcile});

  std::string attributed, bronze;
  for (const auto& r : fx.records.at("open")) {
    const auto& t = fx.truth.copies.at("open").at(r.native_id);
    if (attributed.empty() && t.ta_first && !t.noisy) attributed = *r.doi;
    bool cc = false, other = false;
    for (const auto& l : r.license_evidence)
      if (l.applies_to_vor) (l.url.find("creativecommons") != std::string::npos ? cc : other) = true;
    if (bronze.empty() && other && !cc && t.countable) bronze = *r.doi;
  }
  ASSERT_FALSE(attributed.empty());
  ASSERT_FALSE(bronze.empty());

  auto trace = explain("https://doi.org/" + attributed, cfg);
  EXPECT_NE(trace.find("=> TA-enabled via"), std::string::npos) << trace;
  EXPECT_EQ(trace.substr(trace.rfind('\n', trace.size() - 2) + 1, 15), "TA-enabled via ");

  trace = explain(bronze, cfg);
  EXPECT_NE(trace.find("FAIL (not a Creative Commons licence)"), std::string::npos) << trace;
  EXPECT_NE(trace.find("hybrid_oa=0"), std::string::npos);

  EXPECT_EQ(code_of([&] { explain("10.9999/absent", cfg); }), Errc::UnknownDoi);
  EXPECT_EQ(code_of([&] { explain("not a doi", cfg); }), Errc::UnknownDoi);
}

TEST(Cli, ExitCodes) {
  testutil::TempDir d;
  auto dir = d.path().string();
  EXPECT_EQ(run_cli("gen-fixture " + dir + " --articles 800 --journals 12"), 0);
  auto cfg = "--config " + dir + "/config.json";
  EXPECT_EQ(run_cli("attribute " + cfg), 10 + static_cast<int>(Stage::Attribute));
  EXPECT_EQ(run_cli("run --config " + dir + "/missing.json"), 2);
  EXPECT_EQ(run_cli("run " + cfg + " --years 2023:2019"), 2);
  EXPECT_EQ(run_cli("run " + cfg + " --stages ingest,nope"), 2);
  EXPECT_EQ(run_cli("run " + cfg + " --workers 3"), 0);
  EXPECT_EQ(run_cli("explain 10.9999/absent " + cfg), 3);
  EXPECT_TRUE(fs::exists(d.path() / "out" / "correlations.csv"));
}
