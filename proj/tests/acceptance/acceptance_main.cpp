// Acceptance criteria AC1..AC6. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <fcntl.h>
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hoa/analytics.hpp"
#include "hoa/csv.hpp"
#include "oracles.hpp"
#include "random_corpus.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using hoa::csv::Reader;
using hoa::csv::Row;

extern char** environ;

namespace {

struct Proc {
  int exit_code = -1;
  double seconds = 0;
  long max_rss_kb = 0;
};

long vm_hwm_kb(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6));
  return 0;
}

Proc spawn_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv_s{HOA_CLI_PATH};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
  Proc p;
  auto t0 = Clock::now();
  pid_t pid;
  if (posix_spawn(&pid, HOA_CLI_PATH, &fa, nullptr, argv.data(), environ) != 0) return p;
  posix_spawn_file_actions_destroy(&fa);
  // rusage maxrss keeps the spawning process's high-water mark across exec,
  // so the child's own peak is sampled from /proc while it runs.
  int status = 0;
  rusage ru{};
  while (wait4(pid, &status, WNOHANG, &ru) == 0) {
    p.max_rss_kb = std::max(p.max_rss_kb, vm_hwm_kb(pid));
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  p.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  p.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return p;
}

/// Rows of a CSV file as column-name -> value maps.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path) {
  Reader r(path.string());
  std::vector<std::string> cols;
  std::vector<std::map<std::string, std::string>> out;
  Row row;
  bool first = true;
  while (r.next(row)) {
    if (first) {
      std::ifstream in(path);
      std::string header;
      std::getline(in, header);
      cols = hoa::csv::split_line(hoa::csv::strip_eol(header));
      first = false;
    }
    std::map<std::string, std::string> m;
    for (std::size_t i = 0; i < cols.size(); ++i) m[cols[i]] = std::string(Reader::field(row, i));
    out.push_back(std::move(m));
  }
  return out;
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    out[e.path().filename().string()] = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return out;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

bool report(const std::string& id, Outcome& o) {
  std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << o.detail.str() << std::endl;
  return o.pass;
}

bool run_full(const fs::path& dir, const std::string& config, const std::string& out, unsigned workers,
              double* seconds = nullptr) {
  auto p = spawn_cli({"run", "--config", (dir / config).string(), "--out", (dir / out).string(), "--workers",
                      std::to_string(workers)});
  if (seconds) *seconds = p.seconds;
  return p.exit_code == 0;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  auto t0 = Clock::now();
  std::size_t bad = 0, articles = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto w = randworld::generate(seed * 7919, 1000, 20);
    articles += w.articles.size();
    bad += randworld::discrepancies(w, hoa::Role::First, 1 + seed % 4);
    bad += randworld::discrepancies(w, hoa::Role::Corresponding, 1 + seed % 3);
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.detail << " corpora=100 articles=" << articles << " discrepancies=" << bad << " seconds=" << secs;
  o.check(bad == 0, "oracle discrepancies");
  o.check(secs < 60, "runtime");
  return o;
}

Outcome ac2(const fs::path& fx) {
  Outcome o;
  double secs = 0;
  if (!run_full(fx, "config.json", "out", std::max(1u, std::thread::hardware_concurrency()), &secs)) {
    o.check(false, "pipeline run");
    return o;
  }
  std::map<std::pair<std::string, std::string>, bool> predicted;  // (source:id, role) -> ta
  for (const auto& r : read_csv(fx / "out" / "attributions.csv"))
    predicted[{r.at("source") + ":" + r.at("native_id"), r.at("role")}] = r.at("ta_enabled") == "1";
  std::map<std::string, std::vector<std::string>> roles = {
      {"open", {"first"}}, {"srcA", {"first", "corresponding"}}, {"srcB", {"first", "corresponding"}}};
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& t : read_csv(fx / "truth_labels.csv")) {
    if (t.at("noisy") == "1") continue;
    for (const auto& role : roles.at(t.at("source"))) {
      bool truth = t.at(role == "first" ? "ta_first" : "ta_corresponding") == "1";
      auto it = predicted.find({t.at("source") + ":" + t.at("native_id"), role});
      bool pred = it != predicted.end() && it->second;
      tp += truth && pred;
      fp += !truth && pred;
      fn += truth && !pred;
    }
  }
  double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0;
  double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0;

  std::map<std::pair<std::string, std::string>, std::string> truth_cw;
  for (const auto& r : read_csv(fx / "truth_crosswalk.csv"))
    truth_cw[{r.at("open_id"), r.at("scheme")}] = r.at("proprietary_id");
  std::size_t correct = 0, total = 0;
  for (const auto& r : read_csv(fx / "out" / "crosswalk.csv")) {
    ++total;
    auto it = truth_cw.find({r.at("open_id"), r.at("scheme")});
    correct += it != truth_cw.end() && it->second == r.at("proprietary_id");
  }
  double accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0;
  o.detail << " tp=" << tp << " precision=" << precision << " recall=" << recall
           << " crosswalk_accuracy=" << accuracy << " (" << correct << "/" << total << ") seconds=" << secs;
  o.check(tp > 0 && precision == 1.0, "precision");
  o.check(recall == 1.0, "recall");
  o.check(accuracy >= 0.95, "crosswalk accuracy");
  o.check(secs < 10, "runtime");
  return o;
}

Outcome ac3(const fs::path& fx) {
  Outcome o;
  auto out = fx / "out";
  std::vector<std::string> labels = {"open", "srcA", "srcB"};
  // Independent recomputation of the UpSet partition from classified rows.
  std::map<std::string, std::set<std::string>> oa;
  std::map<std::string, std::map<std::string, std::set<std::string>>> dois;
  for (const auto& s : labels) {
    dois[s];
    for (const auto& r : read_csv(out / ("classified_" + s + ".csv"))) {
      int year = std::stoi(r.at("year"));
      if (year < 2019 || year > 2023) continue;
      if (r.at("is_hybrid_oa") == "1") oa[s].insert(r.at("issn_l"));
      if (r.at("countable") == "1" && !r.at("doi").empty()) dois[s][r.at("issn_l")].insert(r.at("doi"));
    }
  }
  auto want = oracle::upset(oa, dois, "open");
  std::set<std::string> universe;
  for (const auto& [s, js] : oa) universe.insert(js.begin(), js.end());

  std::size_t partition = 0, mismatches = 0, sets = 0;
  for (const auto& r : read_csv(out / "intersections.csv")) {
    ++sets;
    std::set<std::string> m;
    for (const auto& part : hoa::csv::split(r.at("membership"), '&')) m.insert(part);
    partition += std::stoul(r.at("n_journals"));
    auto it = want.find(m);
    if (it == want.end() || it->second.journals != std::stoul(r.at("n_journals")) ||
        it->second.shared != std::stoul(r.at("n_articles_shared")) ||
        it->second.surplus != std::stoul(r.at("n_articles_surplus_open")))
      ++mismatches;
  }
  std::map<std::string, std::size_t> journal_sets;
  for (const auto& r : read_csv(out / "plot_fig2_journals.csv")) ++journal_sets[r.at("issn_l")];
  std::size_t multi = 0;
  for (const auto& [j, n] : journal_sets) multi += n != 1;

  std::size_t chain = 0;
  std::map<std::tuple<std::string, std::string, std::string>, std::array<std::uint64_t, 4>> global, publisher;
  for (const auto& r : read_csv(out / "indicators.csv")) {
    std::array<std::uint64_t, 4> v = {std::stoull(r.at("n_total")), std::stoull(r.at("n_original")),
                                      std::stoull(r.at("n_oa")), std::stoull(r.at("n_ta_oa"))};
    chain += !(v[3] <= v[2] && v[2] <= v[1] && v[1] <= v[0]);
    auto key = std::make_tuple(r.at("year"), r.at("source"), r.at("role"));
    auto& target = r.at("group_kind") == "global" ? global : publisher;
    if (r.at("group_kind") == "country") continue;
    for (int i = 0; i < 4; ++i) target[key][i] += v[i];
  }
  o.detail << " universe=" << universe.size() << " partition_sum=" << partition << " sets=" << sets
           << " oracle_mismatches=" << mismatches << " chain_violations=" << chain;
  o.check(!universe.empty() && partition == universe.size(), "partition sum");
  o.check(sets == want.size() && mismatches == 0, "oracle sets");
  o.check(journal_sets.size() == universe.size() && multi == 0, "journal in exactly one set");
  o.check(chain == 0, "count chain");
  o.check(global == publisher, "global equals sum of publishers");
  return o;
}

Outcome ac4(const fs::path& fx) {
  Outcome o;
  std::vector<double> up = {1, 2, 3, 4, 5, 6}, down = {6, 5, 4, 3, 2, 1};
  std::vector<double> tx = {1, 2, 2, 4}, ty = {1, 3, 2, 4};
  double id = hoa::spearman_rho(up, up), rev = hoa::spearman_rho(up, down), tied = hoa::spearman_rho(tx, ty);
  o.check(std::abs(id - 1) < 1e-12 && std::abs(rev + 1) < 1e-12, "identity and reversal");
  o.check(std::abs(tied - oracle::kTiedExampleRho) < 1e-9, "tied example");

  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int round = 0; round < 1000; ++round) {
    std::size_t n = 2 + rng() % 60;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % 20);
      y[i] = static_cast<double>(rng() % 1000) / 7.0;
    }
    try {
      double rho = hoa::spearman_rho(x, y);
      worst = std::max(worst, std::abs(rho - oracle::spearman(x, y)));
      o.check(std::abs(rho) <= 1.0, "bounded rho");
    } catch (const hoa::Error&) {
    }
  }
  o.check(worst < 1e-9, "random vs oracle");

  // End to end: unfiltered correlations recomputed from the plotted pairs.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pairs;
  for (const auto& r : read_csv(fx / "out" / "plot_fig5_countries.csv")) {
    auto key = r.at("metric") + "|" + r.at("x_source") + "|" + r.at("x_role") + "|" + r.at("y_source") + "|" +
               r.at("y_role");
    pairs[key].first.push_back(std::stod(r.at("x_value")));
    pairs[key].second.push_back(std::stod(r.at("y_value")));
  }
  std::size_t compared = 0;
  double e2e = 0;
  for (const auto& r : read_csv(fx / "out" / "correlations.csv")) {
    if (r.at("group_kind") != "country" || std::stod(r.at("min_count")) != 0 || r.at("status") != "ok") continue;
    auto key = r.at("metric") + "|" + r.at("x_source") + "|" + r.at("x_role") + "|" + r.at("y_source") + "|" +
               r.at("y_role");
    const auto& [x, y] = pairs.at(key);
    e2e = std::max(e2e, std::abs(std::stod(r.at("rho")) - oracle::spearman(x, y)));
    ++compared;
  }
  o.detail << " tied=" << tied << " max_random_error=" << worst << " pipeline_rows=" << compared
           << " max_pipeline_error=" << e2e;
  o.check(compared > 0 && e2e < 1e-9, "pipeline correlations");
  return o;
}

Outcome ac5(const fs::path& base_fx, const fs::path& work) {
  Outcome o;
  // Withheld licence metadata: the publisher's journals drop out of every
  // membership set that includes the open source.
  auto wfx = work / "withheld";
  o.check(spawn_cli({"gen-fixture", wfx.string(), "--withhold-cc", "Emerald"}).exit_code == 0, "gen withheld");
  o.check(run_full(wfx, "config.json", "out", 2), "run withheld");
  std::size_t withheld = 0, withheld_with_open = 0, baseline_with_open = 0;
  for (const auto& r : read_csv(wfx / "out" / "plot_fig2_journals.csv")) {
    if (r.at("publisher") != "Emerald") continue;
    ++withheld;
    withheld_with_open += r.at("membership").find("open") != std::string::npos;
  }
  for (const auto& r : read_csv(base_fx / "out" / "plot_fig2_journals.csv"))
    if (r.at("publisher") == "Emerald") baseline_with_open += r.at("membership").find("open") != std::string::npos;
  o.detail << " withheld_journals=" << withheld << " with_open=" << withheld_with_open
           << " baseline_with_open=" << baseline_with_open;
  o.check(withheld > 0 && withheld_with_open == 0 && baseline_with_open > 0, "withheld membership");

  // Delayed free access: emulation inflates early shares, so the emulated
  // year-over-year trend is lower than the strict one.
  auto dfx = work / "delayed";
  o.check(spawn_cli({"gen-fixture", dfx.string(), "--delayed-oa", "Elsevier"}).exit_code == 0, "gen delayed");
  auto cfg = nlohmann::json::parse(std::ifstream(dfx / "config.json"));
  for (auto& s : cfg["sources"])
    if (s["label"] == "srcA") s["emulate_delayed_oa"] = true;
  std::ofstream(dfx / "config_emulated.json") << cfg.dump(2);
  o.check(run_full(dfx, "config.json", "strict", 2), "run strict");
  o.check(run_full(dfx, "config_emulated.json", "emulated", 2), "run emulated");
  auto shares = [&](const std::string& out) {
    std::map<int, double> s;
    for (const auto& r : read_csv(dfx / out / "indicators.csv"))
      if (r.at("source") == "srcA" && r.at("role") == "first" && r.at("group_kind") == "publisher" &&
          r.at("group_key") == "Elsevier")
        s[std::stoi(r.at("year"))] = std::stod(r.at("oa_share"));
    return s;
  };
  auto strict = shares("strict"), emulated = shares("emulated");
  if (strict.size() < 2 || emulated.size() != strict.size()) {
    o.check(false, "delayed series");
    return o;
  }
  int y0 = strict.begin()->first, y1 = strict.rbegin()->first;
  double d_first = emulated[y0] - strict[y0], d_last = emulated[y1] - strict[y1];
  double trend_strict = strict[y1] - strict[y0], trend_emulated = emulated[y1] - emulated[y0];
  bool nonneg = true;
  for (const auto& [y, v] : strict) nonneg = nonneg && emulated[y] >= v;
  o.detail << " share_gap_first=" << d_first << " share_gap_last=" << d_last << " trend_strict=" << trend_strict
           << " trend_emulated=" << trend_emulated;
  o.check(nonneg && d_first > d_last, "emulation gap shrinks");
  o.check(trend_emulated - trend_strict < 0, "trend sign");
  return o;
}

Outcome ac6(const fs::path& fx, const fs::path& work) {
  Outcome o;
  std::map<std::string, std::string> reference;
  std::size_t differing = 0;
  for (unsigned w : {1u, 2u, 8u}) {
    auto name = "det_w" + std::to_string(w);
    if (!run_full(fx, "config.json", name, w)) {
      o.check(false, "run workers=" + std::to_string(w));
      return o;
    }
    auto files = dir_contents(fx / name);
    if (reference.empty()) reference = files;
    else differing += files != reference;
  }
  o.detail << " files=" << reference.size() << " differing_runs=" << differing;
  o.check(!reference.empty() && differing == 0, "byte-identical outputs");

  auto sdir = work / "stream";
  fs::create_directories(sdir);
  o.check(spawn_cli({"gen-fixture", (sdir / "big.ndjson").string(), "--stream-lines", "1000000"}).exit_code == 0,
          "gen stream");
  {
    std::ifstream in(sdir / "big.ndjson");
    std::ofstream small(sdir / "small.ndjson");
    std::string line;
    for (int i = 0; i < 100000 && std::getline(in, line); ++i) small << line << '\n';
  }
  for (const char* n : {"big", "small"})
    std::ofstream(sdir / (std::string(n) + ".json"))
        << nlohmann::json{{"sources", {{{"label", "open"}, {"articles", std::string(n) + ".ndjson"}, {"open", true}}}},
                          {"years", "2019:2023"},
                          {"output", std::string("out_") + n}}
               .dump();
  auto small = spawn_cli({"ingest", "--config", (sdir / "small.json").string()});
  auto big = spawn_cli({"ingest", "--config", (sdir / "big.json").string()});
  o.detail << " ingest_1M_seconds=" << big.seconds << " rss_1M_kb=" << big.max_rss_kb
           << " rss_100k_kb=" << small.max_rss_kb;
  o.check(small.exit_code == 0 && big.exit_code == 0, "stream ingest");
  o.check(big.seconds < 60, "1M ingest runtime");
  o.check(big.max_rss_kb <= 2 * small.max_rss_kb, "bounded memory");
  return o;
}

}  // namespace

int main() {
  auto work = fs::temp_directory_path() / ("hoa-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  auto fx = work / "fixture";
  bool ok = true;

  auto r1 = ac1();
  ok &= report("AC1", r1);

  Outcome gen;
  gen.check(spawn_cli({"gen-fixture", fx.string()}).exit_code == 0, "gen-fixture");
  Outcome r2 = gen.pass ? ac2(fx) : std::move(gen);
  ok &= report("AC2", r2);
  bool have_run = fs::exists(fx / "out" / "correlations.csv");

  auto skipped = [] {
    Outcome o;
    o.check(false, "no pipeline output");
    return o;
  };
  auto r3 = have_run ? ac3(fx) : skipped();
  ok &= report("AC3", r3);
  auto r4 = have_run ? ac4(fx) : skipped();
  ok &= report("AC4", r4);
  auto r5 = have_run ? ac5(fx, work) : skipped();
  ok &= report("AC5", r5);
  auto r6 = have_run ? ac6(fx, work) : skipped();
  ok &= report("AC6", r6);

  std::error_code ec;
  fs::remove_all(work, ec);
  return ok ? 0 : 1;
}
