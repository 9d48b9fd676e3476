#include "oodenv/cli.hpp"

#include "oodenv/config.hpp"
#include "oodenv/crosssec.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/ingest.hpp"
#include "oodenv/loho.hpp"
#include "oodenv/partition.hpp"
#include "oodenv/report.hpp"
#include "oodenv/scenarios.hpp"
#include "oodenv/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>

namespace oodenv {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path default_out() {
  const char* root = std::getenv("OODENV_OUT_ROOT");
  return fs::path(root && *root ? root : ".") / "run";
}

std::string read_text(const fs::path& p, bool config) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    const std::string msg = "cannot read '" + p.string() + "'";
    if (config) throw ConfigError(msg);
    throw DataError(msg);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << text;
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::string out;
  bool no_timestamp = false;
  std::size_t workers = 0;
};

RunConfig load_config(const Common& c) {
  return c.config.empty() ? parse_run_config("{}") : load_run_config(c.config);
}

Dataset load_checked(const fs::path& dir, std::vector<std::string>& warnings) {
  auto loaded = load_dataset(dir);
  for (const auto& e : loaded.report.errors) warnings.push_back("skipped: " + e);
  for (const auto& w : loaded.report.warnings) warnings.push_back(w);
  const auto violations = validate_dataset(loaded.dataset);
  if (!violations.empty())
    throw DataError("dataset fails validation: " + violations.front().kind + ": " +
                    violations.front().message);
  return std::move(loaded.dataset);
}

Dataset prepare_dataset(const fs::path& dir, const RunConfig& cfg,
                        std::vector<std::string>& warnings) {
  Dataset ds = load_checked(dir, warnings);
  if (cfg.cohort) {
    auto filtered = apply_cohort_filter(ds, *cfg.cohort);
    for (const auto& [reason, n] : filtered.removed)
      if (n) warnings.push_back("cohort filter removed " + std::to_string(n) + " stays (" + reason + ")");
    ds = std::move(filtered.dataset);
  }
  if (cfg.min_hospital_stays > 0) {
    std::vector<HospitalId> removed;
    ds = exclude_small_hospitals(ds, cfg.min_hospital_stays, &removed);
    for (auto id : removed)
      warnings.push_back("hospital " + std::to_string(id) + " excluded (fewer than " +
                         std::to_string(cfg.min_hospital_stays) + " stays)");
  }
  return ds;
}

void write_summary(const fs::path& out, const std::string& command, const Common& c,
                   json details, const std::vector<std::string>& warnings,
                   const std::vector<std::string>& outputs) {
  json j;
  j["command"] = command;
  j["details"] = std::move(details);
  j["outputs"] = outputs;
  j["warnings"] = warnings;
  if (!c.no_timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["timestamp"] = buf;
  }
  write_text(out / ("summary_" + command + ".json"), j.dump(2) + "\n");
}

void report_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_synth(const Common& c, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(c);
  const fs::path dir = c.out.empty() ? default_out() : fs::path(c.out);
  auto [ds, manifest] = generate(cfg.synthetic);
  write_dataset(ds, dir / "data");
  write_text(dir / "manifest.json", manifest_to_json(manifest, cfg.synthetic));
  write_text(dir / "config.json", run_config_to_json(cfg));
  std::vector<std::string> warnings;
  write_summary(dir, "synth", c,
                {{"seed", cfg.seed},
                 {"hospitals", ds.hospitals.size()},
                 {"stays", ds.stays.size()}},
                warnings, {"data/hospitals.csv", "data/stays.csv", "data/timeseries.csv",
                           "manifest.json", "config.json"});
  out << "wrote " << ds.stays.size() << " stays from " << ds.hospitals.size() << " hospitals to "
      << (dir / "data").string() << '\n';
  report_warnings(err, warnings);
  return 0;
}

int cmd_loho(const Common& c, const std::string& data, std::optional<double> threshold,
             std::ostream& out, std::ostream& err) {
  auto cfg = load_config(c);
  if (threshold) {
    cfg.loho.threshold = *threshold;
    cfg.loho.validate();
  }
  if (data.empty()) throw ConfigError("--data is required");
  const fs::path dir = c.out.empty() ? default_out() : fs::path(c.out);
  std::vector<std::string> warnings;
  const auto ds = prepare_dataset(data, cfg, warnings);
  const auto inner = inner_split(ds, cfg.inner_ratios, cfg.seed);
  for (const auto& w : inner.warnings) warnings.push_back(w);
  std::vector<TrainLog> logs;
  auto entries = run_loho(ds, inner, cfg.loho, c.workers, &logs);
  select_candidates(entries, cfg.loho.threshold);
  json folds = json::array();
  const auto ids = ds.hospital_ids();
  for (std::size_t i = 0; i < logs.size(); ++i) {
    folds.push_back({{"hospital_id", ids[i]},
                     {"epochs", logs[i].epochs.size()},
                     {"best_epoch", logs[i].best_epoch},
                     {"loss_fallback", logs[i].loss_fallback}});
    for (const auto& w : logs[i].warnings)
      warnings.push_back("fold " + std::to_string(ids[i]) + ": " + w);
  }
  for (const auto& e : entries)
    if (e.excluded) warnings.push_back("hospital " + std::to_string(e.hospital_id) + " excluded");
  write_text(dir / "loho_ranking.csv", ranking_to_csv(entries));
  write_text(dir / "loho_ranking.svg", ranking_svg(entries));
  write_text(dir / "inner_split.json", plan_to_json(inner));
  write_text(dir / "config.json", run_config_to_json(cfg));
  std::vector<HospitalId> candidates;
  for (const auto& e : entries)
    if (e.is_candidate) candidates.push_back(e.hospital_id);
  write_summary(dir, "loho", c,
                {{"seed", cfg.seed},
                 {"threshold", cfg.loho.threshold},
                 {"candidates", candidates},
                 {"folds", folds}},
                warnings, {"loho_ranking.csv", "loho_ranking.svg", "inner_split.json", "config.json"});
  out << "ranked " << entries.size() << " hospitals; candidates:";
  for (auto id : candidates) out << ' ' << id;
  out << '\n';
  report_warnings(err, warnings);
  return 0;
}

int cmd_assign(const Common& c, const std::string& ranking, const std::string& data,
               std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(c);
  if (ranking.empty() || data.empty()) throw ConfigError("--ranking and --data are required");
  const fs::path dir = c.out.empty() ? default_out() : fs::path(c.out);
  std::vector<std::string> warnings;
  const auto ds = prepare_dataset(data, cfg, warnings);
  const auto entries = ranking_from_csv(read_text(ranking, false));
  const fs::path inner_path = fs::path(ranking).parent_path() / "inner_split.json";
  PartitionPlan inner;
  if (fs::exists(inner_path)) {
    inner = plan_from_json(read_text(inner_path, false));
  } else {
    warnings.push_back("inner_split.json not found beside the ranking; recomputing the inner split");
    inner = inner_split(ds, cfg.inner_ratios, cfg.seed);
  }
  auto plan = assign_candidates(entries, ds, inner, cfg.split_targets);
  plan = with_resampling(std::move(plan), ds, cfg.seed);
  for (const auto& w : plan.warnings) warnings.push_back(w);
  write_text(dir / "plan.json", plan_to_json(plan));
  write_text(dir / "environments.txt", format_environments(plan));
  json sizes = json::object();
  for (auto kind : kAllScenarioKinds)
    for (auto variant : {Variant::Imbalanced, Variant::Resampled})
      sizes[std::string(to_string(kind)) + "/" + std::string(to_string(variant))] =
          build_scenario_data(plan, ds, kind, variant).train.size();
  write_summary(dir, "assign", c,
                {{"seed", cfg.seed},
                 {"achieved", {plan.achieved.train, plan.achieved.val, plan.achieved.test}},
                 {"val_fallback", plan.val_fallback},
                 {"train_sizes", sizes}},
                warnings, {"plan.json", "environments.txt"});
  out << format_environments(plan);
  report_warnings(err, warnings);
  return 0;
}

int cmd_scenarios(const Common& c, const std::string& data, const std::string& plan_path,
                  const std::string& variant, const std::string& preset,
                  const std::string& seeds, std::ostream& out, std::ostream& err) {
  auto cfg = load_config(c);
  if (data.empty() || plan_path.empty()) throw ConfigError("--data and --plan are required");
  if (!variant.empty()) {
    cfg.scenarios.variants.clear();
    for (const auto& v : split_list(variant)) cfg.scenarios.variants.push_back(parse_variant(v));
  }
  if (!preset.empty()) {
    cfg.scenarios.presets.clear();
    for (const auto& p : split_list(preset)) cfg.scenarios.presets.push_back(parse_preset(p));
  }
  if (!seeds.empty()) {
    cfg.scenarios.seeds.clear();
    for (const auto& s : split_list(seeds)) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        cfg.scenarios.seeds.push_back(v);
      } catch (const std::logic_error&) {
        throw ConfigError("--seeds expects a comma-separated list of integers, got '" + s + "'");
      }
    }
  }
  cfg.scenarios.validate();
  const fs::path dir = c.out.empty() ? default_out() : fs::path(c.out);
  std::vector<std::string> warnings;
  const auto ds = prepare_dataset(data, cfg, warnings);
  auto plan = plan_from_json(read_text(plan_path, false));
  const bool resampled = std::find(cfg.scenarios.variants.begin(), cfg.scenarios.variants.end(),
                                   Variant::Resampled) != cfg.scenarios.variants.end();
  if (resampled && plan.subsample_masks.empty()) {
    warnings.push_back("plan has no resampling masks; computing them");
    plan = with_resampling(std::move(plan), ds, cfg.seed);
  }
  const auto runs = run_comparison(ds, plan, cfg.scenarios, c.workers);
  write_text(dir / "scenarios.csv", scenarios_to_csv(runs));
  write_text(dir / "scenario_table.md", comparison_table(runs));
  json rows = json::array();
  for (const auto& r : summarize(runs))
    rows.push_back({{"kind", to_string(r.kind)},
                    {"variant", to_string(r.variant)},
                    {"preset", to_string(r.preset)},
                    {"mean_auc", r.auc.mean},
                    {"sd_auc", r.auc.sd},
                    {"delta_vs_erm", r.delta},
                    {"n_seeds", r.n_seeds}});
  write_summary(dir, "scenarios", c, {{"seed", cfg.seed}, {"summary", rows}}, warnings,
                {"scenarios.csv", "scenario_table.md"});
  out << comparison_table(runs);
  report_warnings(err, warnings);
  return 0;
}

int cmd_crosssec(const Common& c, const std::string& data, const std::string& cont, int k,
                 const std::string& cat, const std::string& test_bins,
                 const std::string& val_bins, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(c);
  if (data.empty()) throw ConfigError("--data is required");
  if (k < 1) throw ConfigError("--k must be >= 1");
  const fs::path dir = c.out.empty() ? default_out() : fs::path(c.out);
  std::vector<std::string> warnings;
  const auto ds = prepare_dataset(data, cfg, warnings);
  const auto plan = make_cross_section(ds, cont, k,
                                       cat.empty() ? std::nullopt : std::optional<std::string>(cat),
                                       split_list(test_bins), split_list(val_bins));
  if (plan.test_bins.empty()) throw ConfigError("--test-bins must name at least one environment");
  for (const auto& w : plan.warnings) warnings.push_back(w);
  const auto derived = envs_to_dataset(ds, plan);
  auto partition = cross_section_partition(derived, plan, cfg.inner_ratios, cfg.seed);
  partition = with_resampling(std::move(partition), derived, cfg.seed);
  for (const auto& w : partition.warnings) warnings.push_back(w);
  write_dataset(derived, dir / "data");
  write_text(dir / "crosssec.json", cross_section_to_json(plan));
  write_text(dir / "plan.json", plan_to_json(partition));
  write_text(dir / "environments.txt", format_environments(partition));
  json envs = json::array();
  for (std::size_t e = 0; e < plan.env_labels.size(); ++e)
    envs.push_back({{"id", e + 1}, {"label", plan.env_labels[e]}});
  write_summary(dir, "crosssec", c, {{"seed", cfg.seed}, {"environments", envs}}, warnings,
                {"data/hospitals.csv", "data/stays.csv", "data/timeseries.csv", "crosssec.json",
                 "plan.json", "environments.txt"});
  for (std::size_t e = 0; e < plan.env_labels.size(); ++e)
    out << e + 1 << '\t' << plan.env_labels[e] << '\n';
  report_warnings(err, warnings);
  return 0;
}

int cmd_report(const Common& c, const std::string& run_dir, std::ostream& out,
               std::ostream& err) {
  const fs::path dir = run_dir.empty() ? default_out() : fs::path(run_dir);
  if (!fs::is_directory(dir)) throw DataError("run directory '" + dir.string() + "' not found");
  std::vector<std::string> warnings;
  ReportInputs in;
  if (fs::exists(dir / "data" / "stays.csv")) in.dataset = load_checked(dir / "data", warnings);
  if (fs::exists(dir / "loho_ranking.csv"))
    in.ranking = ranking_from_csv(read_text(dir / "loho_ranking.csv", false));
  if (fs::exists(dir / "plan.json")) in.plan = plan_from_json(read_text(dir / "plan.json", false));
  if (fs::exists(dir / "scenarios.csv"))
    in.scenarios = scenarios_from_csv(read_text(dir / "scenarios.csv", false));
  const auto files = render_report(in, warnings);
  std::vector<std::string> outputs;
  for (const auto& [name, content] : files) {
    write_text(dir / "report" / name, content);
    outputs.push_back("report/" + name);
  }
  write_summary(dir, "report", c, json::object(), warnings, outputs);
  out << "wrote " << files.size() << " report artifacts to " << (dir / "report").string() << '\n';
  report_warnings(err, warnings);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-distribution environment identification for multi-site time series"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool with_config = true) {
    if (with_config) sub->add_option("--config", common.config, "run configuration (JSON)");
    sub->add_option("--out", common.out, "output directory (default $OODENV_OUT_ROOT/run)");
    sub->add_flag("--no-timestamp", common.no_timestamp, "omit the timestamp from summaries");
    sub->add_option("--workers", common.workers, "worker threads (0 = all cores)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic multi-hospital dataset");
  add_common(synth);

  std::string data, ranking, plan, variant, preset, seeds, cont = "age", cat, test_bins, val_bins,
                                                              run_dir;
  std::optional<double> threshold;
  int k = 10;

  auto* loho = app.add_subcommand("loho", "leave-one-hospital-out ranking");
  add_common(loho);
  loho->add_option("--data", data, "dataset directory");
  loho->add_option("--threshold", threshold, "candidate quantile T in (0, 1]");

  auto* assign = app.add_subcommand("assign", "assign candidates to validation and test splits");
  add_common(assign);
  assign->add_option("--ranking", ranking, "loho_ranking.csv");
  assign->add_option("--data", data, "dataset directory");

  auto* scen = app.add_subcommand("scenarios", "compare ERM, ERMID and ERMMerged");
  add_common(scen);
  scen->add_option("--data", data, "dataset directory");
  scen->add_option("--plan", plan, "plan.json from assign or crosssec");
  scen->add_option("--variant", variant, "imbalanced, resampled or both (comma-separated)");
  scen->add_option("--preset", preset, "small, large or both (comma-separated)");
  scen->add_option("--seeds", seeds, "comma-separated training seeds");

  auto* cross = app.add_subcommand("crosssec", "build cross-sectional feature environments");
  add_common(cross);
  cross->add_option("--data", data, "dataset directory");
  cross->add_option("--cont", cont, "continuous static feature to bin");
  cross->add_option("--k", k, "number of quantile bins");
  cross->add_option("--cat", cat, "categorical static feature to cross with");
  cross->add_option("--test-bins", test_bins, "comma-separated environment labels for TestEnv");
  cross->add_option("--val-bins", val_bins, "comma-separated environment labels for ValEnv");

  auto* report = app.add_subcommand("report", "render figures and tables for a run directory");
  add_common(report, false);
  report->add_option("--run-dir", run_dir, "run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(common, out, err);
    if (*loho) return cmd_loho(common, data, threshold, out, err);
    if (*assign) return cmd_assign(common, ranking, data, out, err);
    if (*scen) return cmd_scenarios(common, data, plan, variant, preset, seeds, out, err);
    if (*cross)
      return cmd_crosssec(common, data, cont, k, cat, test_bins, val_bins, out, err);
    if (*report) return cmd_report(common, run_dir, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 3;
  } catch (const UndefinedMetric& e) {
    err << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace oodenv
