#pragma once

// Figures and tables built from a finished run.

#include "oodenv/core.hpp"
#include "oodenv/metrics.hpp"
#include "oodenv/partition.hpp"
#include "oodenv/rank_entry.hpp"
#include "oodenv/scenarios.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oodenv {

/// Per-split aggregates over hospitals: each hospital contributes its size,
/// its mean age and its fraction of male stays.
struct SplitCharacteristics {
  SplitLabel split = SplitLabel::TrainEnv;
  int n_hospitals = 0;
  int n_stays = 0;
  MeanSd hospital_size;
  MeanSd age;
  MeanSd male_fraction;
  std::map<Region, int> region_counts;  // every region present, zero when absent
};

std::vector<SplitCharacteristics> split_characteristics(const Dataset& ds,
                                                        const PartitionPlan& plan);
/// Markdown table, values as "261.07 ± 244.06".
std::string format_split_table(std::span<const SplitCharacteristics> rows);

std::string format_group_table(const GroupSummary& summary);

/// Out-of-domain AUC bars with CI whiskers and in-domain markers, ordered by
/// p_rank; candidates drawn in a second colour.
std::string ranking_svg(std::span<const RankEntry> entries);
/// Gap (out minus in) against hospital size with a dashed zero line.
std::string gap_vs_size_svg(std::span<const RankEntry> entries,
                            const std::map<HospitalId, int>& sizes);
std::string group_bars_svg(const GroupSummary& summary);
/// Scatter of y against x with hospital-id labels and the least squares line
/// (omitted when the fit is undefined).
std::string scatter_trend_svg(std::span<const double> x, std::span<const double> y,
                              std::span<const HospitalId> ids, const std::string& x_name,
                              const std::string& y_name);

struct ReportInputs {
  std::optional<Dataset> dataset;
  std::optional<std::vector<RankEntry>> ranking;
  std::optional<PartitionPlan> plan;
  std::optional<std::vector<ScenarioRun>> scenarios;
};

/// Every artifact that the available inputs allow, keyed by file name.
/// Missing inputs add a warning and skip the dependent artifacts.
std::map<std::string, std::string> render_report(const ReportInputs& in,
                                                 std::vector<std::string>& warnings);

}  // namespace oodenv
