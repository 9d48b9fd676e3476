#include "doctest.h"

#include "oodenv/errors.hpp"
#include "oodenv/metrics.hpp"
#include "oodenv/rng.hpp"

#include <cmath>

using namespace oodenv;

namespace {

// Pairwise concordance over every (positive, negative) pair.
double brute_force_auc(const Eigen::VectorXd& s, const Eigen::VectorXi& y) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return num / den;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::VectorXi ivec(std::initializer_list<int> v) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (int x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("auc of a small hand-checked example") {
  CHECK(auc_roc(vec({0.8, 0.35, 0.4, 0.1}), ivec({1, 1, 0, 0})) == doctest::Approx(0.75));
  CHECK(auc_roc(vec({0.3, 0.3, 0.3}), ivec({1, 0, 1})) == 0.5);
  CHECK(auc_roc(vec({0.9, 0.8, 0.1}), ivec({1, 1, 0})) == 1.0);
}

TEST_CASE("auc rejects a single class") {
  CHECK_THROWS_AS(auc_roc(vec({0.1, 0.2}), ivec({1, 1})), UndefinedMetric);
}

TEST_CASE("auc matches pairwise concordance, is rank invariant and complementary") {
  Rng rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(40));
    Eigen::VectorXd s(n);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // coarse grid forces ties
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc_roc(s, y);
    CHECK(a == doctest::Approx(brute_force_auc(s, y)).epsilon(1e-12));
    // Scalar exp: Eigen's packet exp can map equal inputs to unequal outputs.
    const Eigen::VectorXd e = s.unaryExpr([](double v) { return std::exp(v); });
    const Eigen::VectorXd lin = 3.0 * s.array() - 7.0;
    CHECK(auc_roc(e, y) == doctest::Approx(a).epsilon(1e-12));
    CHECK(auc_roc(lin, y) == doctest::Approx(a).epsilon(1e-12));
    const Eigen::VectorXi flipped = 1 - y.array();
    CHECK(auc_roc(s, flipped) + a == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("percentiles interpolate between order statistics") {
  const std::vector<double> v{10, 20, 30, 40};
  CHECK(percentile_sorted(v, 0.5) == 25.0);
  CHECK(percentile_sorted(v, 0.0) == 10.0);
  CHECK(percentile_sorted(v, 1.0) == 40.0);
  CHECK(percentile_sorted(v, 0.25) == doctest::Approx(17.5));
}

TEST_CASE("bootstrap is deterministic under seed and degenerate when separable") {
  Rng rng(3);
  const int n = 300;
  Eigen::VectorXd s(n);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 4 == 0;
    s[i] = y[i] + rng.normal(0, 0.7);
  }
  const auto a = bootstrap_ci(s, y, 500, 0.95, 11);
  const auto b = bootstrap_ci(s, y, 500, 0.95, 11);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);
  CHECK(a.ci_lo <= a.value);
  CHECK(a.value <= a.ci_hi);
  CHECK(a.n_examples == n);
  CHECK(a.n_positive == 75);

  Eigen::VectorXd sep(n);
  for (int i = 0; i < n; ++i) sep[i] = y[i] ? 1.0 + i : -1.0 - i;
  const auto d = bootstrap_ci(sep, y, 200, 0.95, 5);
  CHECK(d.ci_lo == 1.0);
  CHECK(d.ci_hi == 1.0);
}

TEST_CASE("bootstrap interval narrows with more examples") {
  auto width = [](int n) {
    Rng rng(static_cast<std::uint64_t>(n));
    Eigen::VectorXd s(n);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 3 == 0;
      s[i] = 2.0 * y[i] + rng.normal();
    }
    const auto r = bootstrap_ci(s, y, 500, 0.95, 1);
    return r.ci_hi - r.ci_lo;
  };
  const double w100 = width(100), w2000 = width(2000);
  CHECK(w2000 < 0.08);
  CHECK(w100 > w2000);
}

TEST_CASE("group summary averages per group") {
  std::map<HospitalId, HospitalMeta> metas;
  metas[1] = {1, Region::West, false, BedBucket::LT100, 10};
  metas[2] = {2, Region::West, true, BedBucket::LT100, 10};
  metas[3] = {3, Region::South, false, BedBucket::GE500, 10};
  std::vector<RankEntry> e(3);
  e[0].hospital_id = 1, e[0].p_in = 0.8, e[0].p_out = 0.6;
  e[1].hospital_id = 2, e[1].p_in = 0.8, e[1].p_out = 0.8;
  e[2].hospital_id = 3, e[2].p_in = 0.8, e[2].p_out = 0.7;
  const auto g = group_summary(e, metas, GroupKey::Region);
  REQUIRE(g.rows.size() == 2);
  CHECK(g.rows[0].group == "West");
  CHECK(g.rows[0].mean_p_out == doctest::Approx(0.7));
  CHECK(g.rows[0].hospital_count == 2);
  CHECK(g.rows[1].group == "South");
  CHECK(g.rows[1].mean_p_out == doctest::Approx(0.7));
  CHECK(g.rows[1].hospital_count == 1);
}

TEST_CASE("least squares trend") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 3, 5, 4};
  const auto fit = ols_trend(x, y);
  CHECK(fit.slope == doctest::Approx(0.8));
  CHECK(fit.intercept == doctest::Approx(1.5));
  const std::vector<double> c{5, 5, 5};
  CHECK(ols_trend(std::vector<double>{1, 2, 3}, c).slope == doctest::Approx(0.0));
  CHECK_THROWS_AS(ols_trend(c, c), DataError);
}

TEST_CASE("report formatting") {
  CHECK(format_ci(0.714, 0.634, 0.791) == "0.71 [0.63-0.79]");
  CHECK(format_mean_sd(0.6213, 0.0149) == "0.62 (±0.01)");
  const auto m = mean_sd(std::vector<double>{1, 2, 3, 4});
  CHECK(m.mean == 2.5);
  CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
}
