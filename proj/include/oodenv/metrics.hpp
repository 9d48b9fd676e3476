#pragma once

// AUC-ROC, bootstrap confidence intervals, grouped summaries and trend fits.

#include "oodenv/core.hpp"
#include "oodenv/rank_entry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oodenv {

/// Probability that a random positive outranks a random negative, ties
/// counted as one half. Throws UndefinedMetric when only one class is present.
double auc_roc(const Eigen::Ref<const Eigen::VectorXd>& scores,
               const Eigen::Ref<const Eigen::VectorXi>& labels);

/// Percentile of already-sorted values with linear interpolation between
/// order statistics (position (n - 1) * q).
double percentile_sorted(std::span<const double> sorted, double q);

struct EvalReport {
  std::string metric = "auc_roc";
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n_boot = 500;
  int n_skipped = 0;  // resamples dropped after repeated single-class draws
  int n_examples = 0;
  int n_positive = 0;
  std::uint64_t seed = 0;
};

/// Percentile bootstrap over (score, label) pairs. Resample i draws from its
/// own substream derived from (seed, i).
EvalReport bootstrap_ci(const Eigen::Ref<const Eigen::VectorXd>& scores,
                        const Eigen::Ref<const Eigen::VectorXi>& labels, int n_boot = 500,
                        double level = 0.95, std::uint64_t seed = 0);

/// The bootstrap AUC replicates themselves, sorted ascending.
std::vector<double> bootstrap_aucs(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                   const Eigen::Ref<const Eigen::VectorXi>& labels, int n_boot,
                                   std::uint64_t seed, int* n_skipped = nullptr);

enum class GroupKey { Region, Teaching, BedBucket };

std::string_view to_string(GroupKey k);
GroupKey parse_group_key(std::string_view s);

struct GroupRow {
  std::string group;
  double mean_p_out = 0.0;
  double mean_p_rank = 0.0;
  int hospital_count = 0;
};

struct GroupSummary {
  GroupKey key = GroupKey::Region;
  std::vector<GroupRow> rows;  // enum order; groups without hospitals are omitted
};

/// Means of p_out and p_rank per group over non-excluded entries.
GroupSummary group_summary(std::span<const RankEntry> entries,
                           const std::map<HospitalId, HospitalMeta>& metas, GroupKey key);

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  int n = 0;
  std::string x_name;
  std::string y_name;
};

/// Closed-form least squares line. Throws DataError for n < 2 or constant x.
TrendFit ols_trend(std::span<const double> x, std::span<const double> y,
                   std::string x_name = "x", std::string y_name = "y");

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};

MeanSd mean_sd(std::span<const double> values);

/// "0.71 [0.63-0.79]"
std::string format_ci(double value, double lo, double hi);
/// "0.62 (±0.01)"
std::string format_mean_sd(double mean, double sd);

}  // namespace oodenv
