#pragma once

// ERM, ERMID and ERMMerged data compositions and the seeded comparison runs.

#include "oodenv/core.hpp"
#include "oodenv/metrics.hpp"
#include "oodenv/model.hpp"
#include "oodenv/partition.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oodenv {

enum class ScenarioKind { Erm, ErmId, ErmMerged };
enum class Variant { Imbalanced, Resampled };

inline constexpr ScenarioKind kAllScenarioKinds[] = {ScenarioKind::Erm, ScenarioKind::ErmId,
                                                     ScenarioKind::ErmMerged};

std::string_view to_string(ScenarioKind k);  // "ERM", "ERMID", "ERMMerged"
std::string_view to_string(Variant v);       // "imbalanced", "resampled"
ScenarioKind parse_scenario_kind(std::string_view s);
Variant parse_variant(std::string_view s);

struct ScenarioData {
  std::vector<std::size_t> train, val, eval;  // dataset indices
};

/// Train, validation and evaluation stays for one scenario. The Resampled
/// variant applies the plan's mask for the scenario when one is stored.
/// Throws DataError when the evaluation or validation set is empty.
ScenarioData build_scenario_data(const PartitionPlan& plan, const Dataset& ds, ScenarioKind kind,
                                 Variant variant = Variant::Imbalanced);

/// Stores size-matched masks for ERM (TrainEnv hospitals) and ERMMerged (all
/// hospitals), both targeting the ERMID training size.
PartitionPlan with_resampling(PartitionPlan plan, const Dataset& ds, std::uint64_t seed);

struct ScenarioRun {
  ScenarioKind kind = ScenarioKind::Erm;
  Variant variant = Variant::Imbalanced;
  Preset preset = Preset::Small;
  std::uint64_t seed = 0;
  int train_size = 0;
  EvalReport eval;
  std::vector<StayId> eval_ids;  // not serialised; for integrity checks
};

struct ScenarioConfig {
  std::vector<ScenarioKind> kinds{std::begin(kAllScenarioKinds), std::end(kAllScenarioKinds)};
  std::vector<Variant> variants{Variant::Imbalanced, Variant::Resampled};
  std::vector<Preset> presets{Preset::Small};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int bootstrap_reps = 500;
  /// Overrides of the preset's training length, mainly for quick runs.
  int max_epochs = 0;  // 0 keeps the preset value

  void validate() const;
};

/// Trains every (variant, preset, kind, seed) combination on a pool of
/// `workers` threads and evaluates on the shared held-out set. A Resampled
/// variant requires masks from with_resampling.
std::vector<ScenarioRun> run_comparison(const Dataset& ds, const PartitionPlan& plan,
                                        const ScenarioConfig& cfg, std::size_t workers = 0);

struct ComparisonRow {
  ScenarioKind kind;
  Variant variant;
  Preset preset;
  MeanSd auc;
  int n_seeds = 0;
  double delta = 0.0;  // mean AUC minus the ERM mean AUC of the same variant and preset
};

std::vector<ComparisonRow> summarize(std::span<const ScenarioRun> runs);

std::string scenarios_to_csv(std::span<const ScenarioRun> runs);
std::vector<ScenarioRun> scenarios_from_csv(const std::string& text);

/// Markdown tables: per-seed AUC with CI for the first seed, then mean (±sd)
/// over seeds with the difference to ERM.
std::string comparison_table(std::span<const ScenarioRun> runs);

}  // namespace oodenv
