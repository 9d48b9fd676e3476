#include "doctest.h"

#include "helpers.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/parallel.hpp"
#include "oodenv/rng.hpp"

#include <algorithm>
#include <set>

using namespace oodenv;

namespace {

bool has(const ValidationReport& r, const std::string& kind) {
  return std::any_of(r.begin(), r.end(), [&](const Violation& v) { return v.kind == kind; });
}

}  // namespace

TEST_CASE("schema vocabularies reserve code 0 for unknown labels") {
  const auto s = FeatureSchema::default_schema();
  CHECK(s.continuous_ts.size() == 10);
  CHECK(s.vocab_size("GCS Total") == 14);
  CHECK(s.vocab_size("gender") == 3);
  CHECK(s.code_of("gender", "nonsense") == 0);
  CHECK(s.label_of("Eyes", 0) == kUnknownLabel);
  int rows = 0;
  for (int v : s.categorical_vocab_sizes()) rows += v;
  CHECK(rows == 56);
}

TEST_CASE("enum names round trip") {
  for (auto r : kAllRegions) CHECK(parse_region(to_string(r)) == r);
  for (auto b : kAllBedBuckets) CHECK(parse_bed_bucket(to_string(b)) == b);
  CHECK(parse_split_label("TestEnv") == SplitLabel::TestEnv);
  CHECK(parse_set_label("ValSet") == SetLabel::ValSet);
}

TEST_CASE("validation finds broken invariants") {
  auto ds = testing::labelled_dataset({testing::labels(3, 1)});
  CHECK(validate_dataset(ds).empty());
  auto dup = ds;
  dup.stays[1].stay_id = dup.stays[0].stay_id;
  CHECK(has(validate_dataset(dup), "duplicate_stay_id"));
  auto orphan = ds;
  orphan.stays[0].hospital_id = 9;
  CHECK(has(validate_dataset(orphan), "unknown_hospital"));
  auto label = ds;
  label.stays[0].label = 2;
  CHECK(has(validate_dataset(label), "label_not_binary"));
  auto code = ds;
  code.stays[0].ts_cat(0, 0) = 99;
  code.stays[0].ts_cat_missing(0, 0) = false;
  CHECK(has(validate_dataset(code), "code_out_of_vocab"));
  auto count = ds;
  count.hospitals[1].n_stays = 7;
  CHECK(has(validate_dataset(count), "n_stays_mismatch"));
}

TEST_CASE("seeded streams are reproducible and independent") {
  Rng a(5, {1, 2}), b(5, {1, 2}), c(5, {2, 1});
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const auto k = u.below(7);
    CHECK(k < 7);
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("parallel_for results do not depend on the worker count") {
  std::vector<std::uint64_t> one(50), four(50);
  parallel_for(50, 1, [&](std::size_t i) { one[i] = Rng(9, {i})(); });
  parallel_for(50, 4, [&](std::size_t i) { four[i] = Rng(9, {i})(); });
  CHECK(one == four);
  CHECK_THROWS_WITH(parallel_for(10, 3,
                                 [](std::size_t i) {
                                   if (i == 4 || i == 7) throw DataError("job " + std::to_string(i));
                                 }),
                    "job 4");
}
