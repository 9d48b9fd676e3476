#pragma once

// Cross-sectional environments: equal-frequency bins of a continuous static
// feature, optionally crossed with a categorical static feature.

#include "oodenv/core.hpp"
#include "oodenv/partition.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oodenv {

struct QuantileBins {
  std::vector<double> edges;  // k - 1 lower bounds of bins 1..k-1
  std::vector<int> bin;       // per value, in input order
  std::vector<std::string> warnings;
};

/// Equal-frequency binning by rank: values are stably sorted and rank r goes
/// to bin floor(r * k / n), so bin sizes differ by at most one. Ties that
/// straddle a bin boundary are split by input order with a warning.
QuantileBins quantile_bins(std::span<const double> values, int k);

struct CrossSectionPlan {
  std::string cont_feature;
  int k = 10;
  std::optional<std::string> cat_feature;
  std::vector<double> bin_edges;
  std::vector<std::string> env_labels;  // distinct labels, bin-major order
  std::map<StayId, std::string> env_of_stay;
  std::vector<std::string> test_bins;
  std::vector<std::string> val_bins;
  std::vector<std::string> warnings;
};

/// Bins `cont_feature` across the whole dataset (before any split). Stays
/// with the value missing form their own "<feature>=missing" environment.
/// Label format: "age_q01" or "age_q01|gender=F". Empty intersections are
/// dropped with a warning. Unknown test or validation labels raise
/// ConfigError.
CrossSectionPlan make_cross_section(const Dataset& ds, const std::string& cont_feature, int k,
                                    const std::optional<std::string>& cat_feature = std::nullopt,
                                    std::vector<std::string> test_bins = {},
                                    std::vector<std::string> val_bins = {});

/// Dataset whose hospitals are the cross-section environments (ids 1..E in
/// env_labels order) with placeholder metadata.
Dataset envs_to_dataset(const Dataset& ds, const CrossSectionPlan& plan);

/// Inner split of the derived dataset plus the environment split: test bins
/// to TestEnv, validation bins to ValEnv, the rest to TrainEnv.
PartitionPlan cross_section_partition(const Dataset& derived, const CrossSectionPlan& plan,
                                      Ratios ratios = kDefaultInnerRatios, std::uint64_t seed = 0);

std::string cross_section_to_json(const CrossSectionPlan& plan);
CrossSectionPlan cross_section_from_json(const std::string& text);

}  // namespace oodenv
