#include "doctest.h"

#include "oodenv/crosssec.hpp"
#include "oodenv/datagen.hpp"
#include "oodenv/errors.hpp"

#include <map>

using namespace oodenv;

TEST_CASE("quantile bins split by rank") {
  std::vector<double> v{6, 1, 9, 2, 10, 3, 7, 4, 8, 5};
  const auto b = quantile_bins(v, 2);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(b.bin[i] == (v[i] <= 5 ? 0 : 1));
  CHECK(b.edges == std::vector<double>{6});
  CHECK(b.warnings.empty());

  const auto each = quantile_bins(v, 10);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(each.bin[i] == static_cast<int>(v[i]) - 1);

  const std::vector<double> same(7, 1.0);
  const auto t = quantile_bins(same, 2);
  CHECK(t.bin == std::vector<int>{0, 0, 0, 0, 1, 1, 1});
  CHECK_FALSE(t.warnings.empty());

  CHECK_THROWS_AS(quantile_bins(same, 8), DataError);
}

TEST_CASE("bin sizes differ by at most one") {
  std::vector<double> v;
  for (int i = 0; i < 103; ++i) v.push_back((i * 37) % 101);
  for (int k : {2, 3, 7, 10}) {
    const auto b = quantile_bins(v, k);
    std::map<int, int> size;
    for (int x : b.bin) ++size[x];
    int lo = 1 << 30, hi = 0;
    for (auto [bin, n] : size) lo = std::min(lo, n), hi = std::max(hi, n);
    CHECK(static_cast<int>(size.size()) == k);
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("cross-section environments feed the partition machinery") {
  GenConfig g;
  g.n_hospitals = 4;
  g.min_stays = 50;
  g.max_stays = 50;
  g.steps = 3;
  g.seed = 2;
  const auto ds = generate(g).first;
  const auto plan = make_cross_section(ds, "age", 5, std::string("gender"),
                                       {"age_q05|gender=F", "age_q05|gender=M"});
  CHECK(plan.env_labels.size() <= 10);
  CHECK(plan.env_of_stay.size() == ds.stays.size());
  const auto derived = envs_to_dataset(ds, plan);
  CHECK(validate_dataset(derived).empty());
  CHECK(derived.stays.size() == ds.stays.size());
  const auto part = cross_section_partition(derived, plan, kDefaultInnerRatios, 1);
  CHECK(part.environments(SplitLabel::TestEnv).size() == 2);
  CHECK(part.val_fallback);

  const auto age_only = make_cross_section(ds, "age", 4);
  CHECK(age_only.env_labels == std::vector<std::string>{"age_q01", "age_q02", "age_q03", "age_q04"});
  const auto gender_only = make_cross_section(ds, "age", 1, std::string("gender"));
  CHECK(gender_only.env_labels.size() == 2);

  CHECK_THROWS_AS(make_cross_section(ds, "age", 4, std::nullopt, {"nope"}), ConfigError);
  CHECK_THROWS_AS(make_cross_section(ds, "heart rate", 4), ConfigError);

  const auto back = cross_section_from_json(cross_section_to_json(plan));
  CHECK(back.env_of_stay == plan.env_of_stay);
  CHECK(back.env_labels == plan.env_labels);
}
