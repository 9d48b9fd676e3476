#pragma once

// Two-level splitting: hospitals into environment splits, stays into sets
// within each hospital, plus size-matched subsampling of training data.

#include "oodenv/core.hpp"
#include "oodenv/rank_entry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace oodenv {

/// Fractions of (train, val, test) as an array indexed by the enum value.
struct Ratios {
  double train = 0.0, val = 0.0, test = 0.0;

  std::array<double, 3> as_array() const { return {train, val, test}; }
  /// Throws ConfigError unless all fractions are >= 0 and sum to one.
  void validate(std::string_view what) const;
};

inline constexpr Ratios kDefaultInnerRatios{0.70, 0.15, 0.15};
inline constexpr Ratios kDefaultSplitTargets{0.85, 0.05, 0.10};

/// Training stays kept after size matching, keyed by stay id.
using SubsampleMask = std::map<StayId, bool>;

struct PartitionPlan {
  std::map<HospitalId, SplitLabel> env_split;
  Ratios inner_ratios = kDefaultInnerRatios;
  std::map<StayId, SetLabel> stay_set;
  /// Size-matched masks per scenario name; absent for the imbalanced variant.
  std::map<std::string, SubsampleMask> subsample_masks;
  std::uint64_t seed = 0;
  /// Patient-count fractions achieved by the environment assignment.
  Ratios achieved{};
  /// No ValEnv hospital: validation uses the ValSets of TrainEnv hospitals.
  bool val_fallback = false;
  std::vector<std::string> warnings;

  std::vector<HospitalId> environments(SplitLabel split) const;
  /// Dataset indices of the stays in `set` of the hospitals in `splits`.
  std::vector<std::size_t> select(const Dataset& ds, std::span<const SplitLabel> splits,
                                  SetLabel set) const;
};

/// Largest-remainder apportionment of `total` over `weights`; remainder ties
/// go to the lower index. The result sums to `total`.
std::vector<int> largest_remainder(int total, std::span<const double> weights);

/// Per-hospital, label-stratified, seeded assignment of stays to sets.
/// Hospitals with fewer than 3 stays go entirely to TrainSet with a warning.
PartitionPlan inner_split(const Dataset& ds, Ratios ratios = kDefaultInnerRatios,
                          std::uint64_t seed = 0);

/// Fills env_split from the candidate flags of `ranked`: candidates sorted by
/// size (descending, then id) go to TestEnv until the test target is met,
/// the remaining candidates to ValEnv, every other hospital to TrainEnv.
/// Throws ConfigError when no entry is a candidate.
PartitionPlan assign_candidates(std::span<const RankEntry> ranked, const Dataset& ds,
                                PartitionPlan plan, Ratios targets = kDefaultSplitTargets);

/// Proportional quotas for `available` stays per environment summing to
/// `target`; every non-empty environment gets at least one when
/// target >= number of non-empty environments.
std::vector<int> size_matched_quotas(std::span<const int> available, int target);

/// Uniform sampling without replacement of the TrainSet stays of `envs`
/// down to `target_size`. Throws ConfigError if the target exceeds the
/// available stays.
SubsampleMask size_matched_resample(const PartitionPlan& plan, const Dataset& ds,
                                    std::span<const HospitalId> envs, int target_size,
                                    std::uint64_t seed);

std::string plan_to_json(const PartitionPlan& plan);
PartitionPlan plan_from_json(const std::string& text);

/// Environment lists as plain id arrays, one line per split.
std::string format_environments(const PartitionPlan& plan);

}  // namespace oodenv
