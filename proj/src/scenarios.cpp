#include "oodenv/scenarios.hpp"

#include "oodenv/csv.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/fit.hpp"
#include "oodenv/parallel.hpp"
#include "oodenv/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace oodenv {

namespace {

constexpr std::uint64_t kModelStream = 0x31;
constexpr std::uint64_t kBootStream = 0x32;
constexpr std::uint64_t kResampleErm = 0x33;
constexpr std::uint64_t kResampleMerged = 0x34;

const csv::Row kScenarioHeader = {"kind", "variant", "preset", "seed",
                                  "train_size", "auc", "ci_lo", "ci_hi"};

constexpr SplitLabel kAllSplits[] = {SplitLabel::TrainEnv, SplitLabel::ValEnv,
                                     SplitLabel::TestEnv};

}  // namespace

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Erm: return "ERM";
    case ScenarioKind::ErmId: return "ERMID";
    case ScenarioKind::ErmMerged: return "ERMMerged";
  }
  return "?";
}

std::string_view to_string(Variant v) {
  return v == Variant::Imbalanced ? "imbalanced" : "resampled";
}

ScenarioKind parse_scenario_kind(std::string_view s) {
  for (auto k : kAllScenarioKinds)
    if (to_string(k) == s) return k;
  throw ConfigError("unknown scenario kind '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s) {
  if (s == "imbalanced") return Variant::Imbalanced;
  if (s == "resampled") return Variant::Resampled;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

ScenarioData build_scenario_data(const PartitionPlan& plan, const Dataset& ds, ScenarioKind kind,
                                 Variant variant) {
  const SplitLabel test_env[] = {SplitLabel::TestEnv};
  const SplitLabel train_env[] = {SplitLabel::TrainEnv};
  const SplitLabel val_env[] = {SplitLabel::ValEnv};
  ScenarioData d;
  d.eval = plan.select(ds, test_env, SetLabel::TestSet);
  switch (kind) {
    case ScenarioKind::Erm:
      d.train = plan.select(ds, train_env, SetLabel::TrainSet);
      d.val = plan.select(ds, val_env, SetLabel::ValSet);
      if (d.val.empty()) d.val = plan.select(ds, train_env, SetLabel::ValSet);
      break;
    case ScenarioKind::ErmId:
      d.train = plan.select(ds, test_env, SetLabel::TrainSet);
      d.val = plan.select(ds, test_env, SetLabel::ValSet);
      break;
    case ScenarioKind::ErmMerged:
      d.train = plan.select(ds, kAllSplits, SetLabel::TrainSet);
      d.val = plan.select(ds, kAllSplits, SetLabel::ValSet);
      break;
  }
  if (variant == Variant::Resampled) {
    const auto it = plan.subsample_masks.find(std::string(to_string(kind)));
    if (it != plan.subsample_masks.end()) {
      const auto& mask = it->second;
      std::erase_if(d.train, [&](std::size_t i) {
        const auto m = mask.find(ds.stays[i].stay_id);
        return m == mask.end() || !m->second;
      });
    } else if (kind != ScenarioKind::ErmId) {
      throw ConfigError("plan has no resampling mask for " + std::string(to_string(kind)));
    }
  }
  if (d.eval.empty()) throw DataError("evaluation set is empty");
  if (d.train.empty())
    throw DataError(std::string(to_string(kind)) + " training set is empty");
  if (d.val.empty())
    throw DataError(std::string(to_string(kind)) + " validation set is empty");
  return d;
}

PartitionPlan with_resampling(PartitionPlan plan, const Dataset& ds, std::uint64_t seed) {
  const auto target =
      static_cast<int>(build_scenario_data(plan, ds, ScenarioKind::ErmId).train.size());
  const auto train_envs = plan.environments(SplitLabel::TrainEnv);
  std::vector<HospitalId> all_envs;
  for (const auto& [hid, split] : plan.env_split) all_envs.push_back(hid);
  plan.subsample_masks[std::string(to_string(ScenarioKind::Erm))] =
      size_matched_resample(plan, ds, train_envs, target, derive_seed(seed, {kResampleErm}));
  plan.subsample_masks[std::string(to_string(ScenarioKind::ErmMerged))] =
      size_matched_resample(plan, ds, all_envs, target, derive_seed(seed, {kResampleMerged}));
  return plan;
}

void ScenarioConfig::validate() const {
  if (kinds.empty() || variants.empty() || presets.empty() || seeds.empty())
    throw ConfigError("scenario config needs at least one kind, variant, preset and seed");
  if (bootstrap_reps < 1) throw ConfigError("bootstrap_reps must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
}

std::vector<ScenarioRun> run_comparison(const Dataset& ds, const PartitionPlan& plan,
                                        const ScenarioConfig& cfg, std::size_t workers) {
  cfg.validate();
  struct Job {
    Variant variant;
    Preset preset;
    ScenarioKind kind;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto v : cfg.variants)
    for (auto p : cfg.presets)
      for (auto k : cfg.kinds)
        for (auto s : cfg.seeds) jobs.push_back({v, p, k, s});

  // Build data up front so configuration errors surface before any training.
  std::map<std::pair<Variant, ScenarioKind>, ScenarioData> data;
  for (const auto& j : jobs)
    if (!data.count({j.variant, j.kind}))
      data[{j.variant, j.kind}] = build_scenario_data(plan, ds, j.kind, j.variant);

  std::vector<ScenarioRun> runs(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto& d = data.at({j.variant, j.kind});
    ModelConfig mc = ModelConfig::from_preset(j.preset);
    if (cfg.max_epochs > 0) mc.max_epochs = cfg.max_epochs;
    // Seed variance re-initialises model and shuffling only; splits are fixed.
    mc.seed = derive_seed(j.seed, {kModelStream});
    auto fit = fit_and_predict(ds, d.train, d.val, {d.eval}, mc);
    ScenarioRun& r = runs[i];
    r.kind = j.kind;
    r.variant = j.variant;
    r.preset = j.preset;
    r.seed = j.seed;
    r.train_size = static_cast<int>(d.train.size());
    r.eval = bootstrap_ci(fit.evals[0].scores, fit.evals[0].labels, cfg.bootstrap_reps, 0.95,
                          derive_seed(j.seed, {kBootStream}));
    for (auto k : d.eval) r.eval_ids.push_back(ds.stays[k].stay_id);
  });
  return runs;
}

std::vector<ComparisonRow> summarize(std::span<const ScenarioRun> runs) {
  std::map<std::tuple<Variant, Preset, ScenarioKind>, std::vector<double>> groups;
  for (const auto& r : runs) groups[{r.variant, r.preset, r.kind}].push_back(r.eval.value);
  std::vector<ComparisonRow> rows;
  for (const auto& [key, values] : groups) {
    ComparisonRow row{std::get<2>(key), std::get<0>(key), std::get<1>(key), mean_sd(values),
                      static_cast<int>(values.size()), 0.0};
    rows.push_back(row);
  }
  for (auto& row : rows) {
    const auto erm = groups.find({row.variant, row.preset, ScenarioKind::Erm});
    if (erm != groups.end()) row.delta = row.auc.mean - mean_sd(erm->second).mean;
  }
  return rows;
}

std::string scenarios_to_csv(std::span<const ScenarioRun> runs) {
  std::ostringstream out;
  out << csv::join(kScenarioHeader) << '\n';
  for (const auto& r : runs)
    out << csv::join({std::string(to_string(r.kind)), std::string(to_string(r.variant)),
                      std::string(to_string(r.preset)), std::to_string(r.seed),
                      std::to_string(r.train_size), csv::format_double(r.eval.value),
                      csv::format_double(r.eval.ci_lo), csv::format_double(r.eval.ci_hi)})
        << '\n';
  return out.str();
}

std::vector<ScenarioRun> scenarios_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ScenarioRun> runs;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto r = csv::split_line(line);
    if (header) {
      if (r != kScenarioHeader) throw DataError("scenarios header mismatch");
      header = false;
      continue;
    }
    if (r.size() != kScenarioHeader.size()) throw DataError("scenarios row has wrong field count");
    ScenarioRun run;
    try {
      run.kind = parse_scenario_kind(r[0]);
      run.variant = parse_variant(r[1]);
      run.preset = parse_preset(r[2]);
      run.seed = std::stoull(r[3]);
      run.train_size = std::stoi(r[4]);
      run.eval.value = std::stod(r[5]);
      run.eval.ci_lo = std::stod(r[6]);
      run.eval.ci_hi = std::stod(r[7]);
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    } catch (const std::logic_error&) {
      throw DataError("bad number in scenarios row '" + line + "'");
    }
    runs.push_back(run);
  }
  if (header) throw DataError("scenarios file is empty");
  return runs;
}

std::string comparison_table(std::span<const ScenarioRun> runs) {
  std::set<Variant> variants;
  std::set<Preset> presets;
  std::set<ScenarioKind> kinds;
  std::map<std::tuple<Variant, Preset, ScenarioKind>, const ScenarioRun*> first;
  for (const auto& r : runs) {
    variants.insert(r.variant);
    presets.insert(r.preset);
    kinds.insert(r.kind);
    auto& slot = first[{r.variant, r.preset, r.kind}];
    if (!slot || r.seed < slot->seed) slot = &r;
  }
  const auto rows = summarize(runs);
  auto find_row = [&](Variant v, Preset p, ScenarioKind k) -> const ComparisonRow* {
    for (const auto& row : rows)
      if (row.variant == v && row.preset == p && row.kind == k) return &row;
    return nullptr;
  };

  std::vector<std::pair<Variant, Preset>> cols;
  for (auto p : presets)
    for (auto v : variants) cols.emplace_back(v, p);
  auto header = [&](std::ostringstream& out) {
    out << "| Scenario |";
    for (auto [v, p] : cols) out << ' ' << to_string(p) << ' ' << to_string(v) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
    out << '\n';
  };

  std::ostringstream out;
  out << "### AUC [95% CI], first seed\n\n";
  header(out);
  for (auto k : kinds) {
    out << "| " << to_string(k) << " |";
    for (auto [v, p] : cols) {
      const auto it = first.find({v, p, k});
      out << ' '
          << (it == first.end() ? std::string("-")
                                : format_ci(it->second->eval.value, it->second->eval.ci_lo,
                                            it->second->eval.ci_hi))
          << " |";
    }
    out << '\n';
  }
  out << "\n### AUC mean (±sd) over seeds\n\n";
  header(out);
  for (auto k : kinds) {
    out << "| " << to_string(k) << " |";
    for (auto [v, p] : cols) {
      const auto* row = find_row(v, p, k);
      out << ' ' << (row ? format_mean_sd(row->auc.mean, row->auc.sd) : std::string("-")) << " |";
    }
    out << '\n';
  }
  for (auto k : kinds) {
    if (k == ScenarioKind::Erm) continue;
    out << "| Δ " << to_string(k) << " - ERM |";
    for (auto [v, p] : cols) {
      const auto* row = find_row(v, p, k);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%+.2f", row ? row->delta : 0.0);
      out << ' ' << (row && find_row(v, p, ScenarioKind::Erm) ? std::string(buf) : "-") << " |";
    }
    out << '\n';
  }
  out << "\nTraining sizes:";
  std::map<std::tuple<Variant, Preset, ScenarioKind>, int> sizes;
  for (const auto& r : runs) sizes[{r.variant, r.preset, r.kind}] = r.train_size;
  for (const auto& [key, n] : sizes)
    out << ' ' << to_string(std::get<2>(key)) << '/' << to_string(std::get<0>(key)) << '/'
        << to_string(std::get<1>(key)) << '=' << n << ';';
  out << '\n';
  return out.str();
}

}  // namespace oodenv
