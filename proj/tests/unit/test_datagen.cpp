#include "doctest.h"

#include "oodenv/datagen.hpp"
#include "oodenv/errors.hpp"

#include <cmath>

using namespace oodenv;

namespace {

GenConfig base(std::uint64_t seed) {
  GenConfig g;
  g.n_hospitals = 6;
  g.min_stays = 200;
  g.max_stays = 300;
  g.steps = 8;
  g.seed = seed;
  return g;
}

}  // namespace

TEST_CASE("generation is deterministic and valid") {
  const auto [a, ma] = generate(base(3));
  const auto [b, mb] = generate(base(3));
  CHECK(a == b);
  CHECK(ma == mb);
  CHECK(validate_dataset(a).empty());
  CHECK_FALSE(a == generate(base(4)).first);
  for (const auto& s : a.stays) {
    CHECK(s.stay_id == s.hospital_id * 100000 + (s.stay_id % 100000));
    CHECK(s.age >= 18);
    CHECK(s.age <= 89);
  }
}

TEST_CASE("gcs total is the sum of its components") {
  const auto ds = generate(base(5)).first;
  const auto& sc = ds.schema;
  for (const auto& s : ds.stays)
    for (int t = 0; t < s.steps(); ++t) {
      if (s.ts_cat_missing.row(t).any()) continue;
      const int total = std::stoi(sc.label_of("GCS Total", s.ts_cat(t, 0)));
      const int parts = std::stoi(sc.label_of("Eyes", s.ts_cat(t, 1))) +
                        std::stoi(sc.label_of("Motor", s.ts_cat(t, 2))) +
                        std::stoi(sc.label_of("Verbal", s.ts_cat(t, 3)));
      CHECK(total == parts);
    }
}

TEST_CASE("prevalence is calibrated") {
  const auto ds = generate(base(6)).first;
  double pos = 0;
  for (const auto& s : ds.stays) pos += s.label;
  CHECK(pos / ds.stays.size() == doctest::Approx(0.11).epsilon(0.35));

  CHECK(mean_sigmoid(0.0, 0.0) == doctest::Approx(0.5));
  const double b = calibrate_intercept(0.2, 4.0);
  CHECK(mean_sigmoid(b, 4.0) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("shifts are recorded in the manifest") {
  auto g = base(7);
  ShiftSpec noise;
  noise.kind = ShiftSpec::Kind::LabelNoise;
  noise.rate = 0.4;
  noise.target_hospitals = {2};
  ShiftSpec prev;
  prev.kind = ShiftSpec::Kind::PrevalenceShift;
  prev.prevalence = 0.5;
  prev.target_hospitals = {3};
  g.shifts = {noise, prev};
  const auto [ds, man] = generate(g);
  CHECK(man.hospitals.at(2).label_noise == 0.4);
  CHECK(man.hospitals.at(2).applied_shifts == std::vector<std::string>{"label_noise"});
  CHECK(man.hospitals.at(1).applied_shifts.empty());
  double pos = 0, n = 0;
  for (const auto& s : ds.stays)
    if (s.hospital_id == 3) pos += s.label, n += 1;
  CHECK(pos / n > 0.35);
}

TEST_CASE("invalid generator settings are config errors") {
  auto g = base(1);
  g.min_stays = 10;
  g.max_stays = 5;
  CHECK_THROWS_AS(generate(g), ConfigError);
  const auto ds = generate(base(1)).first;
  const std::vector<HospitalId> h{1};
  CHECK_THROWS_AS(apply_label_noise(ds, h, 0.7, 1), ConfigError);
  const std::vector<HospitalId> missing{99};
  CHECK_THROWS_AS(apply_label_noise(ds, missing, 0.1, 1), DataError);
}
