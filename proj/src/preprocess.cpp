#include "oodenv/preprocess.hpp"

#include "oodenv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

namespace oodenv {

namespace {

double parse_double(const std::string& s, const std::string& feature) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw DataError("unparseable value '" + s + "' for feature '" + feature + "'");
  return v;
}

}  // namespace

ResampledSeries resample_hourly(std::span<const Observation> events, const FeatureSchema& schema,
                                int steps) {
  const auto n_c = static_cast<Eigen::Index>(schema.continuous_ts.size());
  const auto n_k = static_cast<Eigen::Index>(schema.categorical_ts.size());
  std::map<std::string, std::pair<bool, Eigen::Index>, std::less<>> column;
  for (Eigen::Index j = 0; j < n_c; ++j) column[schema.continuous_ts[j]] = {true, j};
  for (Eigen::Index j = 0; j < n_k; ++j) column[schema.categorical_ts[j]] = {false, j};

  ResampledSeries out;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(steps, n_c);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(steps, n_c);
  Eigen::MatrixXd last_offset = Eigen::MatrixXd::Constant(steps, n_k, -1.0);
  out.ts_cat = Eigen::MatrixXi::Zero(steps, n_k);
  out.ts_cat_missing = MissingMask::Constant(steps, n_k, true);

  for (const auto& e : events) {
    auto it = column.find(e.feature);
    if (it == column.end()) throw DataError("unknown feature '" + e.feature + "'");
    if (!(e.offset_minutes >= 0.0 && e.offset_minutes < 60.0 * steps)) {
      ++out.n_out_of_window;
      continue;
    }
    const auto b = static_cast<Eigen::Index>(std::floor(e.offset_minutes / 60.0));
    const auto [continuous, j] = it->second;
    if (continuous) {
      sum(b, j) += parse_double(e.value, e.feature);
      ++count(b, j);
    } else if (e.offset_minutes >= last_offset(b, j)) {
      const int code = schema.code_of(e.feature, e.value);
      if (code == 0) ++out.n_unknown_labels;
      out.ts_cat(b, j) = code;
      out.ts_cat_missing(b, j) = false;
      last_offset(b, j) = e.offset_minutes;
    }
    ++out.n_assigned;
  }
  out.ts_cont_missing = (count.array() == 0);
  out.ts_cont = (sum.array() / count.array().max(1).cast<double>()).matrix();
  return out;
}

Eigen::MatrixXd forward_fill(const Eigen::MatrixXd& values, const MissingMask& missing,
                             const Eigen::VectorXd& leading_fill) {
  if (leading_fill.size() != values.cols())
    throw DataError("forward_fill: one leading value per column required");
  Eigen::MatrixXd out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    double carry = leading_fill[j];
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
      if (missing(t, j))
        out(t, j) = carry;
      else
        carry = values(t, j);
    }
  }
  return out;
}

Eigen::MatrixXi forward_fill(const Eigen::MatrixXi& codes, const MissingMask& missing) {
  Eigen::MatrixXi out = codes;
  for (Eigen::Index j = 0; j < codes.cols(); ++j) {
    int carry = 0;
    for (Eigen::Index t = 0; t < codes.rows(); ++t) {
      if (missing(t, j))
        out(t, j) = carry;
      else
        carry = codes(t, j);
    }
  }
  return out;
}

FillValues fit_fill_values(const Dataset& ds, std::span<const std::size_t> fit_idx) {
  const auto n_c = static_cast<Eigen::Index>(ds.schema.continuous_ts.size());
  const auto n_s = static_cast<Eigen::Index>(ds.schema.continuous_static.size());
  Eigen::VectorXd ts_sum = Eigen::VectorXd::Zero(n_c), st_sum = Eigen::VectorXd::Zero(n_s);
  Eigen::VectorXd ts_n = Eigen::VectorXd::Zero(n_c), st_n = Eigen::VectorXd::Zero(n_s);
  for (auto i : fit_idx) {
    const auto& s = ds.stays[i];
    const auto observed = (!s.ts_cont_missing).cast<double>();
    ts_sum += (s.ts_cont.array() * observed).colwise().sum().matrix().transpose();
    ts_n += observed.colwise().sum().matrix().transpose();
    const auto st_obs = (!s.static_cont_missing).cast<double>();
    st_sum += (s.static_cont.array() * st_obs).matrix();
    st_n += st_obs.matrix();
  }
  FillValues f;
  f.ts_cont_mean = (ts_n.array() > 0).select(ts_sum.array() / ts_n.array().max(1.0), 0.0);
  f.static_cont_mean = (st_n.array() > 0).select(st_sum.array() / st_n.array().max(1.0), 0.0);
  return f;
}

ModelInput impute(const Stay& stay, const FillValues& fill) {
  ModelInput m;
  m.stay_id = stay.stay_id;
  m.hospital_id = stay.hospital_id;
  m.label = stay.label;
  m.ts_cont = forward_fill(stay.ts_cont, stay.ts_cont_missing, fill.ts_cont_mean);
  m.ts_cat = forward_fill(stay.ts_cat, stay.ts_cat_missing);
  m.static_cont = stay.static_cont_missing.select(fill.static_cont_mean, stay.static_cont);
  m.static_cat = stay.static_cat;
  return m;
}

Scaler fit_scaler(std::span<const ModelInput> fitting, std::string fitted_on) {
  if (fitting.empty()) throw DataError("fit_scaler: empty fitting set");
  const auto n_c = fitting.front().ts_cont.cols();
  const auto n_s = fitting.front().static_cont.size();
  // Two-pass mean / variance in a fixed order.
  Eigen::VectorXd ts_sum = Eigen::VectorXd::Zero(n_c), st_sum = Eigen::VectorXd::Zero(n_s);
  double ts_cells = 0.0;
  for (const auto& m : fitting) {
    ts_sum += m.ts_cont.colwise().sum().transpose();
    st_sum += m.static_cont;
    ts_cells += static_cast<double>(m.ts_cont.rows());
  }
  const double n = static_cast<double>(fitting.size());
  Scaler s;
  s.fitted_on = std::move(fitted_on);
  s.ts_mean = ts_sum / ts_cells;
  s.static_mean = st_sum / n;
  Eigen::VectorXd ts_sq = Eigen::VectorXd::Zero(n_c), st_sq = Eigen::VectorXd::Zero(n_s);
  for (const auto& m : fitting) {
    ts_sq += (m.ts_cont.rowwise() - s.ts_mean.transpose()).array().square().colwise().sum()
                 .matrix().transpose();
    st_sq += (m.static_cont - s.static_mean).array().square().matrix();
  }
  auto clamp = [](Eigen::VectorXd v) {
    for (auto& x : v)
      if (!(x > 0.0)) x = 1.0;
    return v;
  };
  s.ts_std = clamp((ts_sq / ts_cells).cwiseSqrt());
  s.static_std = clamp((st_sq / n).cwiseSqrt());
  return s;
}

ModelInput apply_scaler(const Scaler& scaler, ModelInput input) {
  input.ts_cont = ((input.ts_cont.rowwise() - scaler.ts_mean.transpose()).array().rowwise() /
                   scaler.ts_std.transpose().array())
                      .matrix();
  input.static_cont =
      ((input.static_cont - scaler.static_mean).array() / scaler.static_std.array()).matrix();
  return input;
}

Preprocessor fit_preprocessor(const Dataset& ds, std::span<const std::size_t> train_idx,
                              std::string fitted_on) {
  if (train_idx.empty()) throw DataError("fit_preprocessor: empty training set");
  Preprocessor p;
  p.fill = fit_fill_values(ds, train_idx);
  std::vector<ModelInput> imputed;
  imputed.reserve(train_idx.size());
  for (auto i : train_idx) imputed.push_back(impute(ds.stays[i], p.fill));
  p.scaler = fit_scaler(imputed, std::move(fitted_on));
  return p;
}

std::vector<ModelInput> encode(const Dataset& ds, std::span<const std::size_t> idx,
                               const Preprocessor& prep) {
  std::vector<ModelInput> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(apply_scaler(prep.scaler, impute(ds.stays[i], prep.fill)));
  return out;
}

}  // namespace oodenv
