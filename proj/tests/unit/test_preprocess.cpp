#include "doctest.h"

#include "helpers.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/preprocess.hpp"

#include <numeric>

using namespace oodenv;

TEST_CASE("hourly buckets average continuous and keep the last categorical value") {
  const auto schema = FeatureSchema::default_schema();
  const std::vector<Observation> ev{{10, "Heart Rate", "80"},   {50, "Heart Rate", "90"},
                                    {65, "Heart Rate", "100"},  {5, "Eyes", "2"},
                                    {40, "Eyes", "4"},          {130, "Motor", "banana"},
                                    {600, "Heart Rate", "70"}};
  const auto r = resample_hourly(ev, schema, 3);
  CHECK(r.ts_cont(0, 0) == 85.0);
  CHECK(r.ts_cont(1, 0) == 100.0);
  CHECK(r.ts_cont_missing(2, 0));
  const int eyes = 1;
  REQUIRE(schema.categorical_ts[eyes] == "Eyes");
  CHECK(r.ts_cat(0, eyes) == schema.code_of("Eyes", "4"));
  CHECK(r.ts_cat(2, 2) == 0);
  CHECK(r.n_unknown_labels == 1);
  CHECK(r.n_out_of_window == 1);
  const std::vector<Observation> bad{{0, "Heart Rate", "fast"}};
  CHECK_THROWS_AS(resample_hourly(bad, schema, 3), DataError);
  const std::vector<Observation> unknown{{0, "Pulse", "1"}};
  CHECK_THROWS_AS(resample_hourly(unknown, schema, 3), DataError);
}

TEST_CASE("forward fill carries values and uses the fill for leading gaps") {
  Eigen::MatrixXd v(4, 2);
  v << 0, 1, 2, 0, 0, 0, 5, 0;
  MissingMask m(4, 2);
  m << true, false, false, true, true, true, false, true;
  Eigen::VectorXd lead(2);
  lead << -1, -2;
  const auto f = forward_fill(v, m, lead);
  Eigen::MatrixXd want(4, 2);
  want << -1, 1, 2, 1, 2, 1, 5, 1;
  CHECK(f == want);

  Eigen::MatrixXi c(3, 1);
  c << 0, 3, 0;
  MissingMask cm(3, 1);
  cm << true, false, true;
  Eigen::MatrixXi cw(3, 1);
  cw << 0, 3, 3;
  CHECK(forward_fill(c, cm) == cw);
}

TEST_CASE("scaler is fitted on the training subset only") {
  auto ds = testing::labelled_dataset({testing::labels(4, 1)});
  for (int i = 0; i < 4; ++i) {
    auto& s = ds.stays[i];
    s.ts_cont.col(0).setConstant(10.0 * (i + 1));
    s.ts_cont_missing.col(0).setConstant(false);
  }
  const std::vector<std::size_t> train{0, 1};
  const auto prep = fit_preprocessor(ds, train);
  CHECK(prep.scaler.ts_mean[0] == 15.0);
  CHECK(prep.scaler.ts_std[0] == 5.0);
  CHECK(prep.scaler.ts_std[1] == 1.0);  // never observed: zero spread clamps to one
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const auto enc = encode(ds, all, prep);
  CHECK(enc[3].ts_cont(0, 0) == doctest::Approx(5.0));
  CHECK(enc[3].ts_cont.allFinite());
  CHECK_THROWS_AS(fit_scaler(std::span<const ModelInput>{}), DataError);
}
