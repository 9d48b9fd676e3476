#include "oodenv/report.hpp"

#include "oodenv/errors.hpp"
#include "oodenv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace oodenv {

namespace {

constexpr const char* kBarColour = "#4c72b0";
constexpr const char* kCandidateColour = "#dd8452";

std::string fixed(double v, const char* fmt = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Plot area with linear scales and labelled axes.
struct Frame {
  double w = 720, h = 420, left = 70, right = 20, top = 30, bottom = 70;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
  double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }

  void axes(Svg& svg, const std::string& title, const std::string& x_label,
            const std::string& y_label, bool x_ticks = true) const {
    svg.text(w / 2, 18, title, 13, "middle");
    svg.line(left, h - bottom, w - right, h - bottom, "black");
    svg.line(left, top, left, h - bottom, "black");
    for (int i = 0; i <= 4; ++i) {
      const double y = y0 + (y1 - y0) * i / 4.0;
      svg.line(left - 4, py(y), left, py(y), "black");
      svg.text(left - 6, py(y) + 4, fixed(y), 10, "end");
      if (x_ticks) {
        const double x = x0 + (x1 - x0) * i / 4.0;
        svg.line(px(x), h - bottom, px(x), h - bottom + 4, "black");
        svg.text(px(x), h - bottom + 16, fixed(x, std::abs(x1 - x0) >= 20 ? "%.0f" : "%.2f"), 10,
                 "middle");
      }
    }
    svg.text((left + w - right) / 2, h - 12, x_label, 11, "middle");
    svg.text(16, (top + h - bottom) / 2, y_label, 11, "middle", -90);
  }
};

// Range padded by 5% (or +-0.5 when flat).
std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::vector<SplitCharacteristics> split_characteristics(const Dataset& ds,
                                                        const PartitionPlan& plan) {
  const int male = ds.schema.code_of("gender", "M");
  const auto by_hospital = ds.stays_by_hospital();
  std::vector<SplitCharacteristics> out;
  for (auto split : {SplitLabel::TrainEnv, SplitLabel::ValEnv, SplitLabel::TestEnv}) {
    SplitCharacteristics c;
    c.split = split;
    for (auto r : kAllRegions) c.region_counts[r] = 0;
    std::vector<double> sizes, ages, males;
    for (auto hid : plan.environments(split)) {
      const auto it = by_hospital.find(hid);
      const auto n = it == by_hospital.end() ? 0 : it->second.size();
      ++c.n_hospitals;
      c.n_stays += static_cast<int>(n);
      sizes.push_back(static_cast<double>(n));
      if (const auto meta = ds.hospitals.find(hid); meta != ds.hospitals.end())
        ++c.region_counts[meta->second.region];
      if (n == 0) continue;
      double age = 0.0, m = 0.0;
      for (auto i : it->second) {
        age += ds.stays[i].age;
        m += ds.stays[i].gender == male ? 1.0 : 0.0;
      }
      ages.push_back(age / static_cast<double>(n));
      males.push_back(m / static_cast<double>(n));
    }
    if (!sizes.empty()) c.hospital_size = mean_sd(sizes);
    if (!ages.empty()) {
      c.age = mean_sd(ages);
      c.male_fraction = mean_sd(males);
    }
    out.push_back(c);
  }
  return out;
}

std::string format_split_table(std::span<const SplitCharacteristics> rows) {
  auto pm = [](const MeanSd& v) { return fixed(v.mean) + " ± " + fixed(v.sd); };
  std::ostringstream out;
  out << "| Split | Hospitals | Stays | Hospital size | Age | Male fraction |";
  for (auto r : kAllRegions) out << ' ' << to_string(r) << " |";
  out << "\n|---|---|---|---|---|---|";
  for (std::size_t i = 0; i < std::size(kAllRegions); ++i) out << "---|";
  out << '\n';
  for (const auto& c : rows) {
    out << "| " << to_string(c.split) << " | " << c.n_hospitals << " | " << c.n_stays << " | "
        << pm(c.hospital_size) << " | " << pm(c.age) << " | " << pm(c.male_fraction) << " |";
    for (auto r : kAllRegions) out << ' ' << c.region_counts.at(r) << " |";
    out << '\n';
  }
  return out.str();
}

std::string format_group_table(const GroupSummary& summary) {
  std::ostringstream out;
  out << "| " << to_string(summary.key) << " | Hospitals | Mean p_out | Mean p_rank |\n";
  out << "|---|---|---|---|\n";
  for (const auto& r : summary.rows)
    out << "| " << r.group << " | " << r.hospital_count << " | " << fixed(r.mean_p_out) << " | "
        << fixed(r.mean_p_rank) << " |\n";
  return out.str();
}

std::string ranking_svg(std::span<const RankEntry> entries) {
  std::vector<const RankEntry*> shown;
  for (const auto& e : entries)
    if (!e.excluded) shown.push_back(&e);
  std::stable_sort(shown.begin(), shown.end(), [](const RankEntry* a, const RankEntry* b) {
    return a->p_rank() > b->p_rank();
  });
  Frame f;
  f.w = std::max(360.0, 90.0 + 22.0 * static_cast<double>(shown.size()));
  f.x0 = 0;
  f.x1 = std::max<double>(1, static_cast<double>(shown.size()));
  double lo = 1.0;
  for (const auto* e : shown) lo = std::min({lo, e->ci_out_lo, e->p_in});
  f.y0 = std::floor(lo * 10.0) / 10.0;
  f.y1 = 1.0;
  Svg svg(f.w, f.h);
  f.axes(svg, "Leave-one-hospital-out ranking", "hospital (ordered by p_rank)", "AUC", false);
  const double slot = (f.px(1) - f.px(0));
  for (std::size_t i = 0; i < shown.size(); ++i) {
    const auto& e = *shown[i];
    const double cx = f.px(static_cast<double>(i) + 0.5);
    const double top = f.py(*e.p_out);
    svg.rect(cx - slot * 0.35, top, slot * 0.7, f.py(f.y0) - top,
             e.is_candidate ? kCandidateColour : kBarColour);
    svg.line(cx, f.py(e.ci_out_lo), cx, f.py(e.ci_out_hi), "black");
    svg.line(cx - 3, f.py(e.ci_out_lo), cx + 3, f.py(e.ci_out_lo), "black");
    svg.line(cx - 3, f.py(e.ci_out_hi), cx + 3, f.py(e.ci_out_hi), "black");
    svg.circle(cx, f.py(e.p_in), 3, "black");
    svg.text(cx, f.h - f.bottom + 14, std::to_string(e.hospital_id), 9, "end", -60);
  }
  svg.text(f.w - f.right, f.top + 10, "bars: out-of-domain AUC (95% CI); dots: in-domain AUC", 9,
           "end");
  return svg.str();
}

std::string gap_vs_size_svg(std::span<const RankEntry> entries,
                            const std::map<HospitalId, int>& sizes) {
  std::vector<double> x, y;
  std::vector<const RankEntry*> shown;
  for (const auto& e : entries) {
    if (e.excluded) continue;
    const auto it = sizes.find(e.hospital_id);
    x.push_back(it == sizes.end() ? 0.0 : it->second);
    y.push_back(e.gap());
    shown.push_back(&e);
  }
  Frame f;
  auto [xl, xh] = x.empty() ? std::pair{0.0, 1.0}
                            : padded(*std::min_element(x.begin(), x.end()),
                                     *std::max_element(x.begin(), x.end()));
  double ylo = 0.0, yhi = 0.0;
  for (double v : y) {
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  auto [yl, yh] = padded(ylo, yhi);
  f.x0 = xl, f.x1 = xh, f.y0 = yl, f.y1 = yh;
  Svg svg(f.w, f.h);
  f.axes(svg, "Picking the test set", "hospital size (stays)",
         "out-of-domain minus in-domain AUC");
  svg.line(f.px(f.x0), f.py(0), f.px(f.x1), f.py(0), "grey", 1, true);
  for (std::size_t i = 0; i < shown.size(); ++i) {
    svg.circle(f.px(x[i]), f.py(y[i]), 3.5, shown[i]->is_candidate ? kCandidateColour : kBarColour);
    svg.text(f.px(x[i]) + 5, f.py(y[i]) - 4, std::to_string(shown[i]->hospital_id), 9);
  }
  return svg.str();
}

std::string group_bars_svg(const GroupSummary& summary) {
  Frame f;
  f.w = std::max(360.0, 120.0 + 80.0 * static_cast<double>(summary.rows.size()));
  f.x0 = 0;
  f.x1 = std::max<double>(1, static_cast<double>(summary.rows.size()));
  double lo = 1.0;
  for (const auto& r : summary.rows) lo = std::min(lo, r.mean_p_out);
  f.y0 = std::floor(lo * 10.0) / 10.0 - 0.1;
  if (f.y0 < 0) f.y0 = 0;
  f.y1 = 1.0;
  Svg svg(f.w, f.h);
  f.axes(svg, "Grouped LOHO performance by " + std::string(to_string(summary.key)), "",
         "mean out-of-domain AUC", false);
  const double slot = f.px(1) - f.px(0);
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const auto& r = summary.rows[i];
    const double cx = f.px(static_cast<double>(i) + 0.5);
    const double top = f.py(r.mean_p_out);
    svg.rect(cx - slot * 0.3, top, slot * 0.6, f.py(f.y0) - top, kBarColour);
    svg.text(cx, top - 4, fixed(r.mean_p_out), 10, "middle");
    svg.text(cx, f.h - f.bottom + 16, r.group + " (n=" + std::to_string(r.hospital_count) + ")",
             10, "middle");
  }
  return svg.str();
}

std::string scatter_trend_svg(std::span<const double> x, std::span<const double> y,
                              std::span<const HospitalId> ids, const std::string& x_name,
                              const std::string& y_name) {
  Frame f;
  auto bounds = [](std::span<const double> v) {
    if (v.empty()) return std::pair{0.0, 1.0};
    return padded(*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end()));
  };
  std::tie(f.x0, f.x1) = bounds(x);
  std::tie(f.y0, f.y1) = bounds(y);
  Svg svg(f.w, f.h);
  std::string title = y_name + " against " + x_name;
  std::optional<TrendFit> fit;
  try {
    fit = ols_trend(x, y, x_name, y_name);
  } catch (const DataError&) {
  }
  if (fit) title += " (slope " + fixed(fit->slope, "%.4f") + ")";
  f.axes(svg, title, x_name, y_name);
  for (std::size_t i = 0; i < x.size(); ++i) {
    svg.circle(f.px(x[i]), f.py(y[i]), 3.5, kBarColour);
    if (i < ids.size()) svg.text(f.px(x[i]) + 5, f.py(y[i]) - 4, std::to_string(ids[i]), 9);
  }
  if (fit) {
    auto clamp_y = [&](double v) { return std::clamp(v, f.y0, f.y1); };
    svg.line(f.px(f.x0), f.py(clamp_y(fit->intercept + fit->slope * f.x0)), f.px(f.x1),
             f.py(clamp_y(fit->intercept + fit->slope * f.x1)), kCandidateColour, 1.5);
  }
  return svg.str();
}

std::map<std::string, std::string> render_report(const ReportInputs& in,
                                                 std::vector<std::string>& warnings) {
  std::map<std::string, std::string> files;
  if (!in.dataset) warnings.push_back("dataset missing; size, group and split artifacts skipped");
  if (!in.ranking) warnings.push_back("loho_ranking.csv missing; LOHO figures skipped");
  if (!in.plan) warnings.push_back("plan.json missing; split characteristics skipped");
  if (!in.scenarios) warnings.push_back("scenarios.csv missing; scenario tables skipped");

  if (in.ranking) {
    files["loho_ranking.svg"] = ranking_svg(*in.ranking);
    if (in.dataset) {
      std::map<HospitalId, int> sizes;
      for (const auto& s : in.dataset->stays) ++sizes[s.hospital_id];
      files["gap_vs_size.svg"] = gap_vs_size_svg(*in.ranking, sizes);

      std::string tables;
      for (auto key : {GroupKey::Region, GroupKey::Teaching, GroupKey::BedBucket}) {
        const auto g = group_summary(*in.ranking, in.dataset->hospitals, key);
        files["groups_" + std::string(to_string(key)) + ".svg"] = group_bars_svg(g);
        tables += format_group_table(g) + "\n";
      }
      files["group_summary.md"] = tables;

      // Per-hospital demographics against out-of-domain AUC.
      const int male = in.dataset->schema.code_of("gender", "M");
      const auto by_hospital = in.dataset->stays_by_hospital();
      std::vector<double> age, male_frac, auc;
      std::vector<HospitalId> ids;
      for (const auto& e : *in.ranking) {
        if (e.excluded) continue;
        const auto it = by_hospital.find(e.hospital_id);
        if (it == by_hospital.end() || it->second.empty()) continue;
        double a = 0.0, m = 0.0;
        for (auto i : it->second) {
          a += in.dataset->stays[i].age;
          m += in.dataset->stays[i].gender == male ? 1.0 : 0.0;
        }
        const double n = static_cast<double>(it->second.size());
        age.push_back(a / n);
        male_frac.push_back(m / n);
        auc.push_back(*e.p_out);
        ids.push_back(e.hospital_id);
      }
      files["demographics_age.svg"] =
          scatter_trend_svg(age, auc, ids, "mean age", "out-of-domain AUC");
      files["demographics_gender.svg"] =
          scatter_trend_svg(male_frac, auc, ids, "male fraction", "out-of-domain AUC");
    }
  }
  if (in.plan && in.dataset)
    files["split_characteristics.md"] =
        format_split_table(split_characteristics(*in.dataset, *in.plan));
  if (in.scenarios) files["scenario_table.md"] = comparison_table(*in.scenarios);
  return files;
}

}  // namespace oodenv
