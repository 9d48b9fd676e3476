#include "oodenv/metrics.hpp"

#include "oodenv/errors.hpp"
#include "oodenv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace oodenv {

namespace {

// Indices sorted by score, ties kept in index order.
std::vector<Eigen::Index> score_order(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  std::vector<Eigen::Index> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });
  return order;
}

// AUC from per-example multiplicities, walking tie groups in score order.
// Returns NaN when a class has zero weight.
double weighted_auc(const Eigen::Ref<const Eigen::VectorXd>& scores,
                    const Eigen::Ref<const Eigen::VectorXi>& labels,
                    const std::vector<Eigen::Index>& order, const std::vector<int>& weight) {
  double neg_below = 0.0, concordant = 0.0, total_pos = 0.0, total_neg = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      const auto k = order[j];
      if (labels[k] == 1)
        pos += weight[k];
      else
        neg += weight[k];
      ++j;
    }
    concordant += pos * neg_below + 0.5 * pos * neg;
    neg_below += neg;
    total_pos += pos;
    total_neg += neg;
    i = j;
  }
  if (total_pos == 0.0 || total_neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return concordant / (total_pos * total_neg);
}

void check_inputs(const Eigen::Ref<const Eigen::VectorXd>& scores,
                  const Eigen::Ref<const Eigen::VectorXi>& labels) {
  if (scores.size() != labels.size())
    throw DataError("scores and labels differ in length");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0/1");
}

}  // namespace

double auc_roc(const Eigen::Ref<const Eigen::VectorXd>& scores,
               const Eigen::Ref<const Eigen::VectorXi>& labels) {
  check_inputs(scores, labels);
  const auto order = score_order(scores);
  const std::vector<int> ones(scores.size(), 1);
  const double auc = weighted_auc(scores, labels, order, ones);
  if (std::isnan(auc)) throw UndefinedMetric("AUC undefined: only one class present");
  return auc;
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> bootstrap_aucs(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                   const Eigen::Ref<const Eigen::VectorXi>& labels, int n_boot,
                                   std::uint64_t seed, int* n_skipped) {
  constexpr int kMaxRedraws = 100;
  check_inputs(scores, labels);
  const auto n = static_cast<std::size_t>(scores.size());
  const auto order = score_order(scores);
  std::vector<double> out;
  out.reserve(n_boot);
  std::vector<int> weight(n);
  int skipped = 0;
  for (int b = 0; b < n_boot; ++b) {
    Rng rng(seed, {static_cast<std::uint64_t>(b)});
    double auc = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < kMaxRedraws && std::isnan(auc); ++attempt) {
      std::fill(weight.begin(), weight.end(), 0);
      for (std::size_t i = 0; i < n; ++i) ++weight[rng.below(n)];
      auc = weighted_auc(scores, labels, order, weight);
    }
    if (std::isnan(auc))
      ++skipped;
    else
      out.push_back(auc);
  }
  std::sort(out.begin(), out.end());
  if (n_skipped) *n_skipped = skipped;
  return out;
}

EvalReport bootstrap_ci(const Eigen::Ref<const Eigen::VectorXd>& scores,
                        const Eigen::Ref<const Eigen::VectorXi>& labels, int n_boot, double level,
                        std::uint64_t seed) {
  if (n_boot < 1) throw ConfigError("n_boot must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0, 1)");
  EvalReport r;
  r.value = auc_roc(scores, labels);
  r.n_boot = n_boot;
  r.seed = seed;
  r.n_examples = static_cast<int>(scores.size());
  r.n_positive = labels.sum();
  const auto reps = bootstrap_aucs(scores, labels, n_boot, seed, &r.n_skipped);
  if (reps.empty()) {
    r.ci_lo = r.ci_hi = r.value;
    return r;
  }
  r.ci_lo = percentile_sorted(reps, (1.0 - level) / 2.0);
  r.ci_hi = percentile_sorted(reps, (1.0 + level) / 2.0);
  return r;
}

std::string_view to_string(GroupKey k) {
  switch (k) {
    case GroupKey::Region: return "region";
    case GroupKey::Teaching: return "teaching";
    case GroupKey::BedBucket: return "bed_bucket";
  }
  return "";
}

GroupKey parse_group_key(std::string_view s) {
  if (s == "region") return GroupKey::Region;
  if (s == "teaching") return GroupKey::Teaching;
  if (s == "bed_bucket" || s == "beds") return GroupKey::BedBucket;
  throw ConfigError("unknown group key '" + std::string(s) + "'");
}

GroupSummary group_summary(std::span<const RankEntry> entries,
                           const std::map<HospitalId, HospitalMeta>& metas, GroupKey key) {
  // Group index per key, in enum order so output ordering is fixed.
  auto group_of = [&](const HospitalMeta& m) -> std::pair<int, std::string> {
    switch (key) {
      case GroupKey::Region:
        return {static_cast<int>(m.region), std::string(to_string(m.region))};
      case GroupKey::Teaching:
        return {m.teaching ? 0 : 1, m.teaching ? "teaching" : "non-teaching"};
      case GroupKey::BedBucket:
        return {static_cast<int>(m.bed_bucket), std::string(to_string(m.bed_bucket))};
    }
    return {0, ""};
  };
  std::map<int, GroupRow> acc;
  for (const auto& e : entries) {
    if (e.excluded || !e.p_out) continue;
    auto it = metas.find(e.hospital_id);
    if (it == metas.end())
      throw DataError("ranking references unknown hospital " + std::to_string(e.hospital_id));
    auto [idx, name] = group_of(it->second);
    auto& row = acc[idx];
    row.group = name;
    row.mean_p_out += *e.p_out;
    row.mean_p_rank += e.p_rank();
    ++row.hospital_count;
  }
  GroupSummary out;
  out.key = key;
  for (auto& [idx, row] : acc) {
    row.mean_p_out /= row.hospital_count;
    row.mean_p_rank /= row.hospital_count;
    out.rows.push_back(row);
  }
  return out;
}

TrendFit ols_trend(std::span<const double> x, std::span<const double> y, std::string x_name,
                   std::string y_name) {
  if (x.size() != y.size()) throw DataError("ols_trend: x and y differ in length");
  const auto n = x.size();
  if (n < 2) throw DataError("ols_trend: need at least two points");
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), n), yv(y.data(), n);
  const double mx = xv.mean(), my = yv.mean();
  const double sxx = (xv.array() - mx).square().sum();
  if (sxx == 0.0) throw DataError("ols_trend: x is constant");
  const double sxy = ((xv.array() - mx) * (yv.array() - my)).sum();
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n = static_cast<int>(n);
  fit.x_name = std::move(x_name);
  fit.y_name = std::move(y_name);
  return fit;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  Eigen::Map<const Eigen::VectorXd> v(values.data(), values.size());
  out.mean = v.mean();
  if (values.size() > 1)
    out.sd = std::sqrt((v.array() - out.mean).square().sum() /
                       static_cast<double>(values.size() - 1));
  return out;
}

std::string format_ci(double value, double lo, double hi) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f [%.2f-%.2f]", value, lo, hi);
  return buf;
}

std::string format_mean_sd(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (±%.2f)", mean, sd);
  return buf;
}

}  // namespace oodenv
