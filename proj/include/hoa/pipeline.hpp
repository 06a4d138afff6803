#pragma once

// End-to-end orchestration: declarative configuration, stage execution in
// dependency order, stage artifacts with run manifests, and attribution
// traces. Every stage reads its inputs from the previous stage's artifacts,
// so a stage run alone produces the same bytes as in a full run.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hoa/analytics.hpp"
#include "hoa/attribute.hpp"
#include "hoa/classify.hpp"
#include "hoa/core_model.hpp"
#include "hoa/csv.hpp"
#include "hoa/ingest.hpp"
#include "hoa/reconcile.hpp"
#include "hoa/support.hpp"

namespace hoa::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct SourceConfig {
  SourceId id;
  std::string articles;
  std::string scheme;
  bool open = false;
  SourcePolicy policy;
  std::vector<Role> roles;
};

struct Thresholds {
  std::uint64_t min_support = 1;
  double min_articles_volume = 10000;
  double min_ta_oa = 1000;
  int license_grace_days = 31;
  std::size_t audit_k = 50;
};

struct PipelineConfig {
  fs::path base_dir;
  std::vector<SourceConfig> sources;
  std::string agreements;
  std::string durations;
  std::string issn_links;
  std::vector<std::string> fully_oa_lists;
  std::string institutions;
  std::string publisher_aliases;
  std::string paratext_patterns;
  std::string cc_license_pattern;
  YearRange years;
  std::vector<Role> roles{Role::First, Role::Corresponding};
  Thresholds thresholds;
  std::uint64_t seed = 7;
  std::string output = "out";
  unsigned workers = default_workers();

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
  fs::path out_dir() const { return resolve(output); }

  const SourceConfig& open_source() const {
    for (const auto& s : sources)
      if (s.open) return s;
    throw Error(Errc::ConfigError, "no open source configured");
  }

  /// Roles to run for a source: its own list intersected with the global
  /// list, or the global list.
  std::vector<Role> roles_for(const SourceConfig& s) const {
    if (s.roles.empty()) return roles;
    std::vector<Role> out;
    for (auto r : roles)
      if (std::find(s.roles.begin(), s.roles.end(), r) != s.roles.end()) out.push_back(r);
    return out;
  }

  /// Canonical form; output location and worker count are excluded since
  /// they must not affect results.
  json canonical() const {
    json j;
    j["sources"] = json::array();
    for (const auto& s : sources) {
      json allow = json::array();
      for (const auto& a : s.policy.allowlist) allow.push_back(a);
      json roles_j = json::array();
      for (auto r : s.roles) roles_j.push_back(std::string(role_name(r)));
      j["sources"].push_back({{"label", s.id.label},
                              {"articles", s.articles},
                              {"scheme", s.scheme},
                              {"open", s.open},
                              {"mode", s.policy.mode == ClassMode::Heuristic ? "heuristic" : "allowlist"},
                              {"allowlist", allow},
                              {"emulate_delayed_oa", s.policy.emulate_delayed_oa},
                              {"roles", roles_j}});
    }
    j["agreements"] = agreements;
    j["durations"] = durations;
    j["issn_links"] = issn_links;
    j["fully_oa_lists"] = fully_oa_lists;
    j["institutions"] = institutions;
    j["publisher_aliases"] = publisher_aliases;
    j["paratext_patterns"] = paratext_patterns;
    j["cc_license_pattern"] = cc_license_pattern;
    j["years"] = {years.first, years.last};
    json roles_j = json::array();
    for (auto r : roles) roles_j.push_back(std::string(role_name(r)));
    j["roles"] = roles_j;
    j["thresholds"] = {{"min_support", thresholds.min_support},
                       {"min_articles_volume", thresholds.min_articles_volume},
                       {"min_ta_oa", thresholds.min_ta_oa},
                       {"license_grace_days", thresholds.license_grace_days},
                       {"audit_k", thresholds.audit_k}};
    j["seed"] = seed;
    return j;
  }

  std::string digest() const {
    Digest d;
    d.update(canonical().dump());
    return d.hex();
  }

  void validate() const {
    if (sources.empty()) throw Error(Errc::ConfigError, "no sources configured");
    std::set<std::string> labels;
    std::size_t open = 0;
    for (const auto& s : sources) {
      if (s.id.label.empty()) throw Error(Errc::ConfigError, "source without label");
      if (!labels.insert(s.id.label).second)
        throw Error(Errc::ConfigError, "duplicate source label '" + s.id.label + "'");
      open += s.open;
      if (s.open && s.scheme != kOpenScheme)
        throw Error(Errc::ConfigError, "open source must use the '" + std::string(kOpenScheme) + "' scheme");
      if (!s.open && s.scheme == kOpenScheme)
        throw Error(Errc::ConfigError, "proprietary source '" + s.id.label + "' uses the open scheme");
      must_exist(s.articles);
    }
    if (open != 1) throw Error(Errc::ConfigError, "exactly one source must be marked open");
    if (years.first > years.last) throw Error(Errc::ConfigError, "empty year window");
    if (roles.empty()) throw Error(Errc::ConfigError, "no roles configured");
    for (const auto* p : {&agreements, &durations, &issn_links, &institutions, &publisher_aliases,
                          &paratext_patterns})
      if (!p->empty()) must_exist(*p);
    for (const auto& p : fully_oa_lists) must_exist(p);
    if (!agreements.empty() && durations.empty())
      throw Error(Errc::ConfigError, "agreements given without durations");
  }

 private:
  void must_exist(const std::string& p) const {
    if (!fs::exists(resolve(p)))
      throw Error(Errc::ConfigError, "missing input '" + resolve(p).string() + "'");
  }
};

inline YearRange parse_years(std::string_view s) {
  auto colon = s.find(':');
  try {
    if (colon == std::string_view::npos) throw std::invalid_argument("no colon");
    YearRange y{std::stoi(std::string(s.substr(0, colon))), std::stoi(std::string(s.substr(colon + 1)))};
    if (y.first > y.last) throw Error(Errc::ConfigError, "empty year window '" + std::string(s) + "'");
    return y;
  } catch (const std::logic_error&) {
    throw Error(Errc::ConfigError, "years must look like 2019:2023, got '" + std::string(s) + "'");
  }
}

inline PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    for (const auto& s : j.at("sources")) {
      SourceConfig sc;
      sc.id.label = s.at("label").get<std::string>();
      sc.articles = s.at("articles").get<std::string>();
      sc.open = s.value("open", false);
      sc.scheme = s.value("scheme", sc.open ? std::string(kOpenScheme) : sc.id.label);
      std::string mode = s.value("mode", sc.open ? "heuristic" : "allowlist");
      if (mode == "heuristic") sc.policy.mode = ClassMode::Heuristic;
      else if (mode == "allowlist") sc.policy.mode = ClassMode::Allowlist;
      else throw Error(Errc::ConfigError, "unknown mode '" + mode + "'");
      if (s.contains("allowlist")) {
        sc.policy.allowlist.clear();
        for (const auto& a : s["allowlist"]) sc.policy.allowlist.insert(detail::to_lower(a.get<std::string>()));
      }
      sc.policy.emulate_delayed_oa = s.value("emulate_delayed_oa", false);
      if (s.contains("roles"))
        for (const auto& r : s["roles"]) sc.roles.push_back(parse_role(r.get<std::string>()));
      c.sources.push_back(std::move(sc));
    }
    c.agreements = j.value("agreements", "");
    c.durations = j.value("durations", "");
    c.issn_links = j.value("issn_links", "");
    if (j.contains("fully_oa_lists"))
      c.fully_oa_lists = j["fully_oa_lists"].get<std::vector<std::string>>();
    c.institutions = j.value("institutions", "");
    c.publisher_aliases = j.value("publisher_aliases", "");
    c.paratext_patterns = j.value("paratext_patterns", "");
    c.cc_license_pattern = j.value("cc_license_pattern", "");
    if (j.contains("years")) {
      const auto& y = j["years"];
      if (y.is_string()) c.years = parse_years(y.get<std::string>());
      else c.years = YearRange{y.at(0).get<int>(), y.at(1).get<int>()};
    }
    if (j.contains("roles")) {
      c.roles.clear();
      for (const auto& r : j["roles"]) c.roles.push_back(parse_role(r.get<std::string>()));
    }
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      c.thresholds.min_support = t.value("min_support", c.thresholds.min_support);
      c.thresholds.min_articles_volume = t.value("min_articles_volume", c.thresholds.min_articles_volume);
      c.thresholds.min_ta_oa = t.value("min_ta_oa", c.thresholds.min_ta_oa);
      c.thresholds.license_grace_days = t.value("license_grace_days", c.thresholds.license_grace_days);
      c.thresholds.audit_k = t.value("audit_k", c.thresholds.audit_k);
    }
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, "config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Stages

enum class Stage { Ingest, Classify, Reconcile, Attribute, Aggregate, Compare };

inline constexpr Stage kAllStages[] = {Stage::Ingest,    Stage::Classify,  Stage::Reconcile,
                                       Stage::Attribute, Stage::Aggregate, Stage::Compare};

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Classify: return "classify";
    case Stage::Reconcile: return "reconcile";
    case Stage::Attribute: return "attribute";
    case Stage::Aggregate: return "aggregate";
    case Stage::Compare: return "compare";
  }
  return "";
}

inline Stage parse_stage(std::string_view s) {
  for (auto st : kAllStages)
    if (stage_name(st) == s) return st;
  throw Error(Errc::ConfigError, "unknown stage '" + std::string(s) + "'");
}

/// Comma-separated stage list, returned in dependency order.
inline std::vector<Stage> parse_stages(std::string_view list) {
  std::set<int> chosen;
  for (const auto& part : csv::split(list, ',')) chosen.insert(static_cast<int>(parse_stage(part)));
  std::vector<Stage> out;
  for (int s : chosen) out.push_back(static_cast<Stage>(s));
  return out;
}

class StageError : public Error {
 public:
  StageError(Stage stage, const Error& cause)
      : Error(cause.code(), cause.message()), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

// ---------------------------------------------------------------------------
// Reference data

struct Reference {
  IssnLinkTable links;
  PublisherAliases aliases = PublisherAliases::defaults();
  std::vector<AgreementListing> listings;
  std::vector<Agreement> agreements;
  std::set<Issn> fully_oa;
  InstitutionIndex institutions;
  JournalIndex journals;
  RejectLog rejects;
};

inline Reference load_reference(const PipelineConfig& cfg) {
  Reference ref;
  auto path = [&](const std::string& p) { return cfg.resolve(p).string(); };
  if (!cfg.publisher_aliases.empty()) {
    csv::Reader reader(path(cfg.publisher_aliases));
    if (reader.has_header()) {
      auto ca = reader.column("alias"), cc = reader.column("canonical");
      csv::Row row;
      while (reader.next(row)) {
        auto a = csv::Reader::field(row, ca), c = csv::Reader::field(row, cc);
        if (a.empty() || c.empty()) {
          ref.rejects.add(Reject{reader.path(), row.line, Errc::SchemaViolation, "empty alias", row.raw});
          continue;
        }
        ref.aliases.add(a, c);
      }
    }
  }
  if (!cfg.issn_links.empty()) ref.links = load_issn_link_table(path(cfg.issn_links), ref.rejects);
  std::vector<std::string> lists;
  for (const auto& l : cfg.fully_oa_lists) lists.push_back(path(l));
  ref.fully_oa = load_fully_oa_lists(lists, ref.links, ref.rejects);
  if (!cfg.agreements.empty()) {
    ref.listings = load_agreement_dump(path(cfg.agreements), ref.links, ref.aliases, ref.rejects);
    ref.agreements = load_durations(path(cfg.durations), ref.listings, ref.rejects);
  }
  if (!cfg.institutions.empty()) ref.institutions = load_institutions(path(cfg.institutions), ref.rejects);
  ref.journals = build_journal_index(ref.listings, ref.links, ref.fully_oa);
  return ref;
}

inline ClassifyConfig classify_config(const PipelineConfig& cfg) {
  ClassifyConfig c;
  for (const auto& s : cfg.sources) c.policies[s.id] = s.policy;
  if (!cfg.paratext_patterns.empty())
    c.paratext = ParatextMatcher::from_file(cfg.resolve(cfg.paratext_patterns).string());
  if (!cfg.cc_license_pattern.empty()) c.licenses.set_cc_pattern(cfg.cc_license_pattern);
  c.licenses.grace_days = cfg.thresholds.license_grace_days;
  return c;
}

// ---------------------------------------------------------------------------
// Artifact I/O

struct ArtifactInfo {
  std::string name;
  std::string digest;
  std::size_t rows = 0;
};

/// Writes a CSV artifact and reports its digest and data-row count.
class CsvArtifact {
 public:
  CsvArtifact(const fs::path& dir, std::string name, const std::vector<std::string>& header)
      : name_(std::move(name)), path_(dir / name_), os_(path_, std::ios::binary) {
    if (!os_) throw Error(Errc::IoError, "cannot write " + path_.string());
    csv::write_row(os_, header);
  }
  void row(const std::vector<std::string>& fields) {
    csv::write_row(os_, fields);
    ++rows_;
  }
  ArtifactInfo close() {
    os_.close();
    return {name_, file_digest(path_.string()), rows_};
  }

 private:
  std::string name_;
  fs::path path_;
  std::ofstream os_;
  std::size_t rows_ = 0;
};

inline std::string fmt_ratio(std::optional<double> v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

inline std::string b01(bool b) { return b ? "1" : "0"; }

inline std::string corpus_name(const SourceConfig& s) { return "corpus_" + s.id.label + ".ndjson"; }
inline std::string classified_name(const SourceConfig& s) { return "classified_" + s.id.label + ".csv"; }

inline void require(const fs::path& p, Stage stage) {
  if (!fs::exists(p))
    throw Error(Errc::DependencyError, std::string(stage_name(stage)) + " needs '" +
                                           p.filename().string() + "'; run the earlier stages first");
}

inline json artifact_json(const ArtifactInfo& a) {
  return {{"artifact", a.name}, {"digest", a.digest}, {"rows", a.rows}};
}

inline void write_manifest(const PipelineConfig& cfg, Stage stage, const std::vector<json>& inputs,
                           const std::vector<ArtifactInfo>& outputs, const json& counts) {
  json m;
  m["stage"] = std::string(stage_name(stage));
  m["config_digest"] = cfg.digest();
  m["inputs"] = inputs;
  m["outputs"] = json::array();
  for (const auto& o : outputs) m["outputs"].push_back(artifact_json(o));
  m["counts"] = counts;
  std::ofstream os(cfg.out_dir() / ("manifest_" + std::string(stage_name(stage)) + ".json"),
                   std::ios::binary);
  os << m.dump(2) << '\n';
}

inline json input_json(const PipelineConfig& cfg, const std::string& p) {
  return {{"path", p}, {"digest", file_digest(cfg.resolve(p).string())}};
}

inline json artifact_input(const fs::path& dir, const std::string& name) {
  return {{"artifact", name}, {"digest", file_digest((dir / name).string())}};
}

/// Classified corpora rebuilt from the ingest and classify artifacts.
inline Corpora load_classified(const PipelineConfig& cfg, const Reference& ref, Stage stage,
                               std::vector<json>* inputs = nullptr) {
  Corpora corpora;
  auto dir = cfg.out_dir();
  for (const auto& s : cfg.sources) {
    require(dir / corpus_name(s), stage);
    require(dir / classified_name(s), stage);
    if (inputs) {
      inputs->push_back(artifact_input(dir, corpus_name(s)));
      inputs->push_back(artifact_input(dir, classified_name(s)));
    }
    RejectLog rejects;
    auto records = load_articles((dir / corpus_name(s)).string(), s.id, ref.links, rejects);
    if (rejects.count())
      throw Error(Errc::DependencyError, corpus_name(s) + " contains invalid lines");
    csv::Reader reader((dir / classified_name(s)).string());
    const auto c_id = reader.column("native_id"), c_year = reader.column("year"),
               c_known = reader.column("journal_known"), c_hyb = reader.column("journal_hybrid"),
               c_orig = reader.column("is_original"), c_para = reader.column("is_paratext"),
               c_reg = reader.column("in_regular_issue"), c_unk = reader.column("unknown_class"),
               c_ev = reader.column("has_oa_evidence"), c_oa = reader.column("is_hybrid_oa"),
               c_cnt = reader.column("countable");
    auto& out = corpora[s.id];
    out.reserve(records.size());
    csv::Row row;
    std::size_t i = 0;
    while (reader.next(row)) {
      if (i >= records.size() || csv::Reader::field(row, c_id) != records[i].native_id)
        throw Error(Errc::DependencyError, classified_name(s) + " does not match " + corpus_name(s));
      auto flag = [&](std::size_t c) { return csv::Reader::field(row, c) == "1"; };
      ClassifiedArticle c;
      c.year = std::stoi(std::string(csv::Reader::field(row, c_year)));
      c.journal_known = flag(c_known);
      c.journal_hybrid = flag(c_hyb);
      c.is_original = flag(c_orig);
      c.is_paratext = flag(c_para);
      c.in_regular_issue = flag(c_reg);
      c.unknown_class = flag(c_unk);
      c.has_oa_evidence = flag(c_ev);
      c.is_hybrid_oa = flag(c_oa);
      c.countable = flag(c_cnt);
      c.record = std::move(records[i++]);
      out.push_back(std::move(c));
    }
    if (i != records.size())
      throw Error(Errc::DependencyError, classified_name(s) + " does not match " + corpus_name(s));
  }
  return corpora;
}

inline Crosswalk load_crosswalk(const fs::path& path) {
  csv::Reader reader(path.string());
  std::vector<CrosswalkEntry> entries;
  if (reader.has_header()) {
    auto c_open = reader.column("open_id"), c_scheme = reader.column("scheme"),
         c_prop = reader.column("proprietary_id"), c_sup = reader.column("support");
    csv::Row row;
    while (reader.next(row))
      entries.push_back(CrosswalkEntry{std::string(csv::Reader::field(row, c_open)),
                                       std::string(csv::Reader::field(row, c_scheme)),
                                       std::string(csv::Reader::field(row, c_prop)),
                                       std::stoull(std::string(csv::Reader::field(row, c_sup)))});
  }
  return Crosswalk(std::move(entries));
}

/// TA-enabled native ids per (source, role) from the attribution artifact.
inline std::map<std::pair<std::string, Role>, std::set<std::string>> load_ta_ids(const fs::path& path) {
  std::map<std::pair<std::string, Role>, std::set<std::string>> out;
  csv::Reader reader(path.string());
  auto c_src = reader.column("source"), c_id = reader.column("native_id"),
       c_role = reader.column("role"), c_ta = reader.column("ta_enabled");
  csv::Row row;
  while (reader.next(row)) {
    auto& set = out[{std::string(csv::Reader::field(row, c_src)),
                     parse_role(csv::Reader::field(row, c_role))}];
    if (csv::Reader::field(row, c_ta) == "1") set.insert(std::string(csv::Reader::field(row, c_id)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage implementations

inline void run_ingest(const PipelineConfig& cfg, const Reference& ref) {
  auto dir = cfg.out_dir();
  std::vector<json> inputs;
  for (const auto& p : {cfg.agreements, cfg.durations, cfg.issn_links, cfg.institutions,
                        cfg.publisher_aliases})
    if (!p.empty()) inputs.push_back(input_json(cfg, p));
  for (const auto& p : cfg.fully_oa_lists) inputs.push_back(input_json(cfg, p));

  struct SourceResult {
    CorpusManifest manifest;
    std::exception_ptr error;
  };
  std::vector<SourceResult> results(cfg.sources.size());

  // One reader thread per source feeding a bounded queue drained by a writer.
  auto ingest_one = [&](std::size_t i) {
    const auto& s = cfg.sources[i];
    try {
      std::ofstream out(dir / corpus_name(s), std::ios::binary);
      std::ofstream rej(dir / ("rejects_" + s.id.label + ".csv"), std::ios::binary);
      if (!out || !rej) throw Error(Errc::IoError, "cannot write into " + dir.string());
      RejectLog rejects(rej);
      BoundedQueue<ArticleRecord> queue(1024);
      std::exception_ptr producer_error;
      std::thread producer([&] {
        try {
          results[i].manifest = load_article_stream(
              cfg.resolve(s.articles).string(), s.id, ref.links,
              [&](ArticleRecord&& r) { queue.push(std::move(r)); }, rejects);
        } catch (...) {
          producer_error = std::current_exception();
        }
        queue.close();
      });
      while (auto r = queue.pop()) out << to_line(*r) << '\n';
      producer.join();
      if (producer_error) std::rethrow_exception(producer_error);
      results[i].manifest.reject_log_path = "rejects_" + s.id.label + ".csv";
    } catch (...) {
      results[i].error = std::current_exception();
    }
  };
  if (cfg.workers > 1) {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) threads.emplace_back(ingest_one, i);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) ingest_one(i);
  }
  for (const auto& r : results)
    if (r.error) std::rethrow_exception(r.error);

  std::vector<ArtifactInfo> outputs;
  json counts = json::object();
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const auto& s = cfg.sources[i];
    const auto& m = results[i].manifest;
    inputs.push_back(input_json(cfg, s.articles));
    outputs.push_back({corpus_name(s), file_digest((dir / corpus_name(s)).string()), m.record_count});
    outputs.push_back({m.reject_log_path, file_digest((dir / m.reject_log_path).string()), m.reject_count});
    counts[s.id.label] = {{"input_lines", m.input_lines},
                          {"records", m.record_count},
                          {"rejects", m.reject_count},
                          {"reject_log", m.reject_log_path}};
  }

  {
    CsvArtifact a(dir, "agreements.csv",
                  {"agreement_id", "publisher", "start_date", "end_date", "journal_issn_ls", "institution_ids"});
    for (const auto& ag : ref.agreements) {
      std::vector<std::string> issns, insts(ag.institution_ids.begin(), ag.institution_ids.end());
      for (const auto& i : ag.journal_issn_ls) issns.push_back(i.str());
      a.row({ag.agreement_id, ag.publisher, format_date(ag.window.start), format_date(ag.window.end),
             csv::join(issns), csv::join(insts)});
    }
    outputs.push_back(a.close());
  }
  {
    CsvArtifact a(dir, "journals.csv", {"issn_l", "publisher", "is_hybrid", "issn_variants"});
    for (const auto& [issn, j] : ref.journals) {
      std::vector<std::string> v;
      for (const auto& x : j.issn_variants) v.push_back(x.str());
      a.row({issn.str(), j.publisher, b01(j.is_hybrid), csv::join(v)});
    }
    outputs.push_back(a.close());
  }
  {
    std::ofstream os(dir / "rejects_reference.csv", std::ios::binary);
    ref.rejects.write(os);
    os.close();
    outputs.push_back({"rejects_reference.csv", file_digest((dir / "rejects_reference.csv").string()),
                       ref.rejects.count()});
  }
  counts["reference"] = {{"agreements", ref.agreements.size()},
                         {"listings", ref.listings.size()},
                         {"journals", ref.journals.size()},
                         {"fully_oa", ref.fully_oa.size()},
                         {"institution_keys", ref.institutions.key_count()},
                         {"rejects", ref.rejects.count()}};
  write_manifest(cfg, Stage::Ingest, inputs, outputs, counts);
}

inline void run_classify(const PipelineConfig& cfg, const Reference& ref) {
  auto dir = cfg.out_dir();
  auto ccfg = classify_config(cfg);
  std::vector<json> inputs;
  std::vector<ArtifactInfo> outputs;
  json counts = json::object();
  for (const auto& s : cfg.sources) {
    require(dir / corpus_name(s), Stage::Classify);
    inputs.push_back(artifact_input(dir, corpus_name(s)));
    RejectLog rejects;
    auto records = load_articles((dir / corpus_name(s)).string(), s.id, ref.links, rejects);
    if (rejects.count()) throw Error(Errc::DependencyError, corpus_name(s) + " contains invalid lines");

    std::vector<ClassifiedArticle> classified(records.size());
    parallel_shards(records.size(), cfg.workers, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) classified[i] = classify(std::move(records[i]), ref.journals, ccfg);
    });

    CsvArtifact a(dir, classified_name(s),
                  {"source", "native_id", "doi", "issn_l", "year", "journal_known", "journal_hybrid",
                   "is_original", "is_paratext", "in_regular_issue", "unknown_class", "has_oa_evidence",
                   "is_hybrid_oa", "countable"});
    std::size_t n_countable = 0, n_oa = 0, n_unknown = 0;
    for (const auto& c : classified) {
      a.row({c.record.source.label, c.record.native_id, c.record.doi.value_or(""),
             c.record.journal_issn_l.str(), std::to_string(c.year), b01(c.journal_known),
             b01(c.journal_hybrid), b01(c.is_original), b01(c.is_paratext), b01(c.in_regular_issue),
             b01(c.unknown_class), b01(c.has_oa_evidence), b01(c.is_hybrid_oa), b01(c.countable)});
      n_countable += c.countable;
      n_oa += c.is_hybrid_oa;
      n_unknown += c.unknown_class;
    }
    outputs.push_back(a.close());
    counts[s.id.label] = {{"input_records", classified.size()},
                          {"countable", n_countable},
                          {"hybrid_oa", n_oa},
                          {"unknown_document_class", n_unknown}};
  }
  write_manifest(cfg, Stage::Classify, inputs, outputs, counts);
}

inline void run_reconcile(const PipelineConfig& cfg, const Reference& ref) {
  auto dir = cfg.out_dir();
  std::vector<json> inputs;
  auto corpora = load_classified(cfg, ref, Stage::Reconcile, &inputs);
  const auto& open = cfg.open_source();
  const auto& open_corpus = corpora.at(open.id);

  std::vector<PairTally> tallies;
  json counts = json::object();
  CsvArtifact ambiguous(dir, "bridge_ambiguous.csv", {"source", "doi"});
  for (const auto& s : cfg.sources) {
    if (s.open) continue;
    auto bridge = build_bridge(open_corpus, corpora.at(s.id));
    auto t = tally_pairs(bridge, open_corpus, corpora.at(s.id), s.scheme, cfg.workers);
    for (const auto& d : bridge.ambiguous) ambiguous.row({s.id.label, d});
    counts[s.id.label] = {{"bridged", bridge.pairs.size()},
                          {"ambiguous", bridge.ambiguous.size()},
                          {"pairs", t.size()}};
    tallies.insert(tallies.end(), t.begin(), t.end());
  }
  auto crosswalk = select_crosswalk(tallies, cfg.thresholds.min_support);

  std::vector<ArtifactInfo> outputs;
  {
    CsvArtifact a(dir, "crosswalk.csv", {"open_id", "scheme", "proprietary_id", "support"});
    for (const auto& e : crosswalk.entries())
      a.row({e.open_id, e.scheme, e.proprietary_id, std::to_string(e.support)});
    outputs.push_back(a.close());
  }
  {
    CsvArtifact a(dir, "audit_sample.csv",
                  {"open_id", "scheme", "proprietary_id", "support", "example_doi"});
    auto k = std::min(cfg.thresholds.audit_k, crosswalk.size());
    auto sample = audit_sample(crosswalk, k, cfg.seed);
    auto dois = example_dois(sample, tallies);
    for (std::size_t i = 0; i < sample.size(); ++i)
      a.row({sample[i].open_id, sample[i].scheme, sample[i].proprietary_id,
             std::to_string(sample[i].support), dois[i]});
    outputs.push_back(a.close());
  }
  outputs.push_back(ambiguous.close());
  counts["crosswalk_entries"] = crosswalk.size();
  write_manifest(cfg, Stage::Reconcile, inputs, outputs, counts);
}

inline void run_attribute(const PipelineConfig& cfg, const Reference& ref) {
  auto dir = cfg.out_dir();
  std::vector<json> inputs;
  require(dir / "crosswalk.csv", Stage::Attribute);
  auto corpora = load_classified(cfg, ref, Stage::Attribute, &inputs);
  inputs.push_back(artifact_input(dir, "crosswalk.csv"));
  auto crosswalk = load_crosswalk(dir / "crosswalk.csv");
  AgreementIndex agreements(ref.agreements);
  AttributionContext ctx{agreements, crosswalk, ref.institutions};

  CsvArtifact a(dir, "attributions.csv",
                {"source", "native_id", "doi", "year", "role", "ta_enabled", "agreement_ids",
                 "matched_institution"});
  json counts = json::object();
  for (const auto& s : cfg.sources) {
    const auto& corpus = corpora.at(s.id);
    std::size_t oa = 0;
    for (const auto& c : corpus) oa += c.is_hybrid_oa;
    for (auto role : cfg.roles_for(s)) {
      auto rows = attribute_corpus(corpus, role, ctx, cfg.workers);
      std::size_t enabled = 0;
      for (const auto& r : rows) {
        enabled += r.ta_enabled();
        a.row({r.source.label, r.native_id, r.doi.value_or(""), std::to_string(r.year),
               std::string(role_name(role)), b01(r.ta_enabled()),
               csv::join({r.agreement_ids.begin(), r.agreement_ids.end()}), r.matched_institution});
      }
      counts[s.id.label][std::string(role_name(role))] = {
          {"input_hybrid_oa", oa}, {"rows", rows.size()}, {"ta_enabled", enabled}};
    }
  }
  write_manifest(cfg, Stage::Attribute, inputs, {a.close()}, counts);
}

inline void run_aggregate(const PipelineConfig& cfg, const Reference& ref) {
  auto dir = cfg.out_dir();
  require(dir / "attributions.csv", Stage::Aggregate);
  std::vector<json> inputs;
  auto corpora = load_classified(cfg, ref, Stage::Aggregate, &inputs);
  inputs.push_back(artifact_input(dir, "attributions.csv"));
  auto ta_ids = load_ta_ids(dir / "attributions.csv");
  const auto& open = cfg.open_source();

  std::vector<ArtifactInfo> outputs;
  json counts = json::object();
  {
    CsvArtifact ind(dir, "indicators.csv",
                    {"year", "source", "role", "group_kind", "group_key", "n_total", "n_original",
                     "n_oa", "n_ta_oa", "oa_share", "ta_share_of_oa"});
    CsvArtifact fig4(dir, "plot_fig4_uptake.csv",
                     {"year", "source", "role", "group_kind", "group_key", "oa_share", "n_ta_oa",
                      "ta_share_of_oa"});
    std::size_t rows = 0;
    static const std::set<std::string> none;
    for (const auto& s : cfg.sources) {
      for (auto role : cfg.roles_for(s)) {
        auto it = ta_ids.find({s.id.label, role});
        const auto& ids = it == ta_ids.end() ? none : it->second;
        for (auto kind : {GroupKind::Global, GroupKind::Publisher, GroupKind::Country}) {
          for (const auto& r : aggregate(corpora.at(s.id), ids, ref.journals, kind, role, cfg.years,
                                         cfg.workers)) {
            ind.row({std::to_string(r.year), r.source.label, std::string(role_name(r.role)),
                     std::string(group_kind_name(r.group_kind)), r.group_key, std::to_string(r.n_total),
                     std::to_string(r.n_original), std::to_string(r.n_oa), std::to_string(r.n_ta_oa),
                     fmt_ratio(r.oa_share()), fmt_ratio(r.ta_share_of_oa())});
            if (kind != GroupKind::Country)
              fig4.row({std::to_string(r.year), r.source.label, std::string(role_name(r.role)),
                        std::string(group_kind_name(r.group_kind)), r.group_key,
                        fmt_ratio(r.oa_share()), std::to_string(r.n_ta_oa),
                        fmt_ratio(r.ta_share_of_oa())});
            ++rows;
          }
        }
      }
    }
    outputs.push_back(ind.close());
    outputs.push_back(fig4.close());
    counts["indicator_rows"] = rows;
  }

  auto universe = journal_universe(corpora, cfg.years);
  auto sets = upset_sets(universe, corpora, open.id, cfg.years);
  {
    CsvArtifact a(dir, "intersections.csv",
                  {"membership", "n_journals", "n_articles_shared", "n_articles_surplus_open"});
    for (const auto& s : sets)
      a.row({membership_label(s.membership), std::to_string(s.n_journals),
             std::to_string(s.n_articles_shared), std::to_string(s.n_articles_surplus_open)});
    outputs.push_back(a.close());
  }
  {
    // Per-journal shared volume (box plots) and per-publisher set composition.
    auto dois = countable_dois(corpora, cfg.years);
    CsvArtifact fig2(dir, "plot_fig2_journals.csv", {"membership", "issn_l", "publisher", "n_shared_dois"});
    CsvArtifact fig3(dir, "plot_fig3_publishers.csv",
                     {"membership", "publisher", "n_journals", "n_articles_shared"});
    for (const auto& s : sets) {
      std::map<std::string, std::pair<std::size_t, std::size_t>> by_pub;
      for (const auto& issn : s.journals) {
        std::size_t shared = 0;
        auto first = dois[*s.membership.begin()][issn];
        for (const auto& d : first) {
          bool all = true;
          for (const auto& m : s.membership) all = all && dois[m][issn].count(d);
          shared += all;
        }
        auto jt = ref.journals.find(issn);
        std::string pub = jt == ref.journals.end() ? "unknown" : jt->second.publisher;
        fig2.row({membership_label(s.membership), issn.str(), pub, std::to_string(shared)});
        by_pub[pub].first += 1;
        by_pub[pub].second += shared;
      }
      for (const auto& [pub, v] : by_pub)
        fig3.row({membership_label(s.membership), pub, std::to_string(v.first), std::to_string(v.second)});
    }
    outputs.push_back(fig2.close());
    outputs.push_back(fig3.close());
  }
  {
    CsvArtifact a(dir, "coverage.csv",
                  {"source", "active_journals", "active_journals_original",
                   "active_journals_original_oa", "total_articles", "original_articles",
                   "articles_with_doi", "original_articles_with_doi", "oa_articles",
                   "original_oa_articles", "first_author_articles", "corresponding_author_articles"});
    for (const auto& s : cfg.sources) {
      auto c = coverage(s.id, corpora.at(s.id), cfg.years);
      a.row({s.id.label, std::to_string(c.active_journals), std::to_string(c.active_journals_original),
             std::to_string(c.active_journals_original_oa), std::to_string(c.total_articles),
             std::to_string(c.original_articles), std::to_string(c.articles_with_doi),
             std::to_string(c.original_articles_with_doi), std::to_string(c.oa_articles),
             std::to_string(c.original_oa_articles), std::to_string(c.first_author_articles),
             std::to_string(c.corresponding_author_articles)});
    }
    outputs.push_back(a.close());
  }
  counts["universe_journals"] = universe.size();
  counts["intersection_sets"] = sets.size();
  write_manifest(cfg, Stage::Aggregate, inputs, outputs, counts);
}

/// Indicator rows read back from indicators.csv.
inline std::vector<IndicatorRow> load_indicators(const fs::path& path) {
  std::vector<IndicatorRow> out;
  csv::Reader reader(path.string());
  auto c_year = reader.column("year"), c_src = reader.column("source"), c_role = reader.column("role"),
       c_kind = reader.column("group_kind"), c_key = reader.column("group_key"),
       c_tot = reader.column("n_total"), c_orig = reader.column("n_original"),
       c_oa = reader.column("n_oa"), c_ta = reader.column("n_ta_oa");
  csv::Row row;
  auto num = [&](std::size_t c) { return std::stoull(std::string(csv::Reader::field(row, c))); };
  while (reader.next(row)) {
    IndicatorRow r;
    r.year = std::stoi(std::string(csv::Reader::field(row, c_year)));
    r.source.label = std::string(csv::Reader::field(row, c_src));
    r.role = parse_role(csv::Reader::field(row, c_role));
    auto kind = csv::Reader::field(row, c_kind);
    r.group_kind = kind == "country" ? GroupKind::Country : kind == "publisher" ? GroupKind::Publisher
                                                                                : GroupKind::Global;
    r.group_key = std::string(csv::Reader::field(row, c_key));
    r.n_total = num(c_tot);
    r.n_original = num(c_orig);
    r.n_oa = num(c_oa);
    r.n_ta_oa = num(c_ta);
    out.push_back(std::move(r));
  }
  return out;
}

enum class Metric { Volume, OaShare, TaOa, TaShare };

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Volume: return "n_original";
    case Metric::OaShare: return "oa_share";
    case Metric::TaOa: return "n_ta_oa";
    case Metric::TaShare: return "ta_share_of_oa";
  }
  return "";
}

inline std::map<std::string, double> metric_values(const std::map<std::string, IndicatorRow>& totals,
                                                   Metric m) {
  std::map<std::string, double> out;
  for (const auto& [k, r] : totals) {
    switch (m) {
      case Metric::Volume: out[k] = static_cast<double>(r.n_original); break;
      case Metric::OaShare:
        if (auto v = r.oa_share()) out[k] = *v;
        break;
      case Metric::TaOa: out[k] = static_cast<double>(r.n_ta_oa); break;
      case Metric::TaShare:
        if (auto v = r.ta_share_of_oa()) out[k] = *v;
        break;
    }
  }
  return out;
}

inline void run_compare(const PipelineConfig& cfg, const Reference&) {
  auto dir = cfg.out_dir();
  require(dir / "indicators.csv", Stage::Compare);
  auto rows = load_indicators(dir / "indicators.csv");
  const auto& open = cfg.open_source();

  using Series = std::tuple<std::string, Role, GroupKind>;
  std::map<Series, std::vector<IndicatorRow>> series;
  for (const auto& r : rows) series[{r.source.label, r.role, r.group_kind}].push_back(r);
  auto totals = [&](const std::string& src, Role role, GroupKind kind) {
    auto it = series.find({src, role, kind});
    if (it == series.end()) return std::map<std::string, IndicatorRow>{};
    return totals_by_group(it->second);
  };

  struct Pair {
    std::string xs;
    Role xr;
    std::string ys;
    Role yr;
  };
  std::vector<Pair> pairs;
  for (const auto& s : cfg.sources) {
    if (s.open) continue;
    for (auto r : cfg.roles_for(s)) pairs.push_back({open.id.label, Role::First, s.id.label, r});
  }
  for (const auto& s : cfg.sources) {
    auto roles = cfg.roles_for(s);
    if (std::find(roles.begin(), roles.end(), Role::First) != roles.end() &&
        std::find(roles.begin(), roles.end(), Role::Corresponding) != roles.end())
      pairs.push_back({s.id.label, Role::First, s.id.label, Role::Corresponding});
  }

  CsvArtifact out(dir, "correlations.csv",
                  {"group_kind", "metric", "x_source", "x_role", "y_source", "y_role", "min_count",
                   "n", "rho", "status"});
  CsvArtifact fig5(dir, "plot_fig5_countries.csv",
                   {"country", "metric", "x_source", "x_role", "x_value", "y_source", "y_role", "y_value"});
  std::size_t ok = 0;
  for (auto kind : {GroupKind::Country, GroupKind::Publisher}) {
    for (const auto& p : pairs) {
      auto tx = totals(p.xs, p.xr, kind);
      auto ty = totals(p.ys, p.yr, kind);
      std::map<std::string, double> volume_counts, ta_counts;
      for (const auto& [k, r] : tx) {
        volume_counts[k] = static_cast<double>(r.n_original);
        ta_counts[k] = static_cast<double>(r.n_ta_oa);
      }
      for (auto m : {Metric::Volume, Metric::OaShare, Metric::TaOa, Metric::TaShare}) {
        auto x = metric_values(tx, m);
        auto y = metric_values(ty, m);
        bool ta_metric = m == Metric::TaOa || m == Metric::TaShare;
        const auto& filter = ta_metric ? ta_counts : volume_counts;
        double threshold = ta_metric ? cfg.thresholds.min_ta_oa : cfg.thresholds.min_articles_volume;
        for (double t : {threshold, 0.0}) {
          std::vector<std::string> fields{std::string(group_kind_name(kind)), std::string(metric_name(m)),
                                          p.xs, std::string(role_name(p.xr)), p.ys,
                                          std::string(role_name(p.yr)), fmt_double(t)};
          try {
            auto res = spearman(x, y, &filter, t);
            fields.insert(fields.end(), {std::to_string(res.n), fmt_double(res.rho), "ok"});
            ++ok;
          } catch (const Error& e) {
            fields.insert(fields.end(), {"", "", std::string(errc_name(e.code()))});
          }
          out.row(fields);
          if (t == 0.0) break;
        }
        if (kind == GroupKind::Country) {
          for (const auto& [k, xv] : x) {
            auto yt = y.find(k);
            if (yt == y.end()) continue;
            fig5.row({k, std::string(metric_name(m)), p.xs, std::string(role_name(p.xr)), fmt_double(xv),
                      p.ys, std::string(role_name(p.yr)), fmt_double(yt->second)});
          }
        }
      }
    }
  }
  write_manifest(cfg, Stage::Compare, {artifact_input(dir, "indicators.csv")}, {out.close(), fig5.close()},
                 {{"pairs", pairs.size()}, {"correlations_ok", ok}});
}

/// Runs the requested stages in dependency order. A failing stage is
/// reported as StageError.
inline void run(const PipelineConfig& cfg, const std::vector<Stage>& stages) {
  cfg.validate();
  fs::create_directories(cfg.out_dir());
  Reference ref = load_reference(cfg);
  std::vector<Stage> ordered(stages);
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
  for (auto stage : ordered) {
    try {
      switch (stage) {
        case Stage::Ingest: run_ingest(cfg, ref); break;
        case Stage::Classify: run_classify(cfg, ref); break;
        case Stage::Reconcile: run_reconcile(cfg, ref); break;
        case Stage::Attribute: run_attribute(cfg, ref); break;
        case Stage::Aggregate: run_aggregate(cfg, ref); break;
        case Stage::Compare: run_compare(cfg, ref); break;
      }
    } catch (const Error& e) {
      throw StageError(stage, e);
    } catch (const std::exception& e) {
      throw StageError(stage, Error(Errc::IoError, e.what()));
    }
  }
}

// ---------------------------------------------------------------------------
// Explain

/// Human-readable trace of how each source classified and attributed a DOI.
inline std::string explain(const std::string& raw_doi, const PipelineConfig& cfg) {
  auto doi = normalize_doi(raw_doi);
  if (!doi) throw Error(Errc::UnknownDoi, "'" + raw_doi + "' is not a DOI");
  auto dir = cfg.out_dir();
  Reference ref = load_reference(cfg);
  auto corpora = load_classified(cfg, ref, Stage::Attribute);
  require(dir / "crosswalk.csv", Stage::Attribute);
  auto crosswalk = load_crosswalk(dir / "crosswalk.csv");
  AgreementIndex agreements(ref.agreements);
  AttributionContext ctx{agreements, crosswalk, ref.institutions};
  auto ccfg = classify_config(cfg);

  std::ostringstream os;
  os << "doi: " << *doi << '\n';
  bool found = false;
  std::string verdict;
  for (const auto& s : cfg.sources) {
    for (const auto& c : corpora.at(s.id)) {
      if (c.record.doi != doi) continue;
      found = true;
      const auto& r = c.record;
      os << "[" << s.id.label << "] " << r.native_id << " issn_l=" << r.journal_issn_l.str()
         << " pub_date=" << format_date(r.pub_date) << " year=" << c.year << '\n';
      os << "  class='" << r.document_class << "' original=" << c.is_original
         << " paratext=" << c.is_paratext << " regular_issue=" << c.in_regular_issue
         << " hybrid_journal=" << c.journal_hybrid << " countable=" << c.countable << '\n';
      if (r.license_evidence.empty()) os << "  license: none FAIL (no licence metadata)\n";
      Date latest = add_days(r.pub_date, ccfg.licenses.grace_days);
      for (const auto& l : r.license_evidence) {
        std::string why;
        if (!l.applies_to_vor) why = "not for the version of record";
        else if (!std::regex_search(l.url, ccfg.licenses.cc_pattern)) why = "not a Creative Commons licence";
        else if (l.start_date && latest < *l.start_date) why = "starts after the grace window (delayed)";
        os << "  license: " << l.url << (l.start_date ? " from " + format_date(*l.start_date) : "")
           << (why.empty() ? " PASS" : " FAIL (" + why + ")") << '\n';
      }
      if (s.policy.emulate_delayed_oa) os << "  note: delayed-access emulation on for this source\n";
      os << "  hybrid_oa=" << c.is_hybrid_oa << '\n';
      for (auto role : cfg.roles_for(s)) {
        auto orgs = resolved_role_orgs(r, role, ctx);
        os << "  role " << role_name(role) << ": orgs={" << csv::join({orgs.begin(), orgs.end()}, ',')
           << "}\n";
        for (const auto& cl : check_clauses(r, role, ctx))
          os << "    " << cl.agreement_id << ": journal " << (cl.journal ? "PASS" : "FAIL")
             << ", institution " << (cl.institution ? "PASS" : "FAIL") << ", window "
             << (cl.window ? "PASS" : "FAIL") << '\n';
        auto m = match_agreements(c, role, ctx);
        if (m) {
          auto first = *m->agreement_ids.begin();
          os << "    => TA-enabled via " << first << '\n';
          if (verdict.empty()) verdict = "TA-enabled via " + first;
        } else {
          os << "    => not TA-enabled" << (c.is_hybrid_oa ? "" : " (not hybrid OA)") << '\n';
        }
      }
    }
  }
  if (!found) throw Error(Errc::UnknownDoi, *doi + " not in any corpus");
  os << (verdict.empty() ? std::string("not TA-enabled") : verdict) << '\n';
  return os.str();
}

}  // namespace hoa::pipeline
