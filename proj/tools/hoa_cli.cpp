#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hoa/fixture.hpp"
#include "hoa/pipeline.hpp"

namespace {

namespace pl = hoa::pipeline;

constexpr int kExitConfig = 2;
constexpr int kExitExplain = 3;
constexpr int kExitStageBase = 10;

struct Overrides {
  std::string config = "config.json";
  std::optional<std::string> years;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::string> role;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "pipeline configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--years", o.years, "inclusive year window, e.g. 2019:2023");
  cmd->add_option("--seed", o.seed, "audit sampling seed");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--role", o.role, "restrict to one author role: first or corresponding");
}

pl::PipelineConfig load(const Overrides& o) {
  auto cfg = pl::load_config(o.config);
  if (o.years) cfg.years = pl::parse_years(*o.years);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.out) cfg.output = std::filesystem::absolute(*o.out).string();
  if (o.role) cfg.roles = {hoa::parse_role(*o.role)};
  return cfg;
}

void report(std::string_view stage, const hoa::Error& e) {
  nlohmann::json j{{"stage", std::string(stage)},
                   {"error", std::string(hoa::errc_name(e.code()))},
                   {"message", e.message()}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid open access under transformative agreements: batch pipeline"};
  app.require_subcommand(1);
  Overrides o;

  std::string stages_list;
  auto* run = app.add_subcommand("run", "run stages in dependency order");
  add_common(run, o);
  run->add_option("--stages", stages_list, "comma-separated stages (default: all)");

  std::optional<pl::Stage> single;
  for (auto st : pl::kAllStages) {
    auto* cmd = app.add_subcommand(std::string(pl::stage_name(st)), "run the " +
                                                                        std::string(pl::stage_name(st)) +
                                                                        " stage alone");
    add_common(cmd, o);
    cmd->callback([&single, st] { single = st; });
  }

  std::string doi;
  auto* explain = app.add_subcommand("explain", "trace attribution of one DOI");
  add_common(explain, o);
  explain->add_option("doi", doi, "DOI to explain")->required();

  hoa::fixture::Params fx;
  std::string fx_dir = "fixture";
  std::size_t stream_lines = 0;
  auto* gen = app.add_subcommand("gen-fixture", "write a synthetic input set with planted truth");
  gen->add_option("dir", fx_dir, "target directory");
  gen->add_option("--seed", fx.seed, "generator seed");
  gen->add_option("--articles", fx.articles, "base articles");
  gen->add_option("--journals", fx.journals, "hybrid journals");
  gen->add_option("--noise", fx.noise, "affiliation noise rate");
  gen->add_option("--withhold-cc", fx.withhold_cc_publisher,
                  "publisher whose licence metadata the open source lacks");
  gen->add_option("--delayed-oa", fx.delayed_oa_publisher, "publisher with delayed free access");
  gen->add_option("--stream-lines", stream_lines,
                  "instead write one stream file of this many article lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  std::string stage_label = "config";
  try {
    if (gen->parsed()) {
      if (stream_lines) {
        hoa::fixture::write_stream(fx_dir, stream_lines, fx.seed);
      } else {
        hoa::fixture::write(hoa::fixture::generate(fx), fx_dir);
      }
      return 0;
    }
    auto cfg = load(o);
    cfg.validate();
    if (explain->parsed()) {
      stage_label = "explain";
      std::cout << pl::explain(doi, cfg);
      return 0;
    }
    std::vector<pl::Stage> stages;
    if (single) stages = {*single};
    else if (!stages_list.empty()) stages = pl::parse_stages(stages_list);
    else stages.assign(std::begin(pl::kAllStages), std::end(pl::kAllStages));
    pl::run(cfg, stages);
    std::cout << "ok: " << cfg.out_dir().string() << '\n';
    return 0;
  } catch (const pl::StageError& e) {
    report(pl::stage_name(e.stage()), e);
    return kExitStageBase + static_cast<int>(e.stage());
  } catch (const hoa::Error& e) {
    report(stage_label, e);
    if (e.code() == hoa::Errc::UnknownDoi) return kExitExplain;
    return kExitConfig;
  } catch (const std::exception& e) {
    report(stage_label, hoa::Error(hoa::Errc::IoError, e.what()));
    return 1;
  }
}
