#include "doctest.h"

#include "helpers.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/partition.hpp"
#include "oodenv/rng.hpp"

#include <numeric>

using namespace oodenv;

namespace {

std::array<int, 3> set_counts(const PartitionPlan& plan, const Dataset& ds, HospitalId hid) {
  std::array<int, 3> c{0, 0, 0};
  for (const auto& s : ds.stays)
    if (s.hospital_id == hid) ++c[static_cast<int>(plan.stay_set.at(s.stay_id))];
  return c;
}

RankEntry candidate(HospitalId id, bool is_candidate) {
  RankEntry e;
  e.hospital_id = id;
  e.p_out = 0.5;
  e.is_candidate = is_candidate;
  return e;
}

}  // namespace

TEST_CASE("largest remainder apportionment") {
  CHECK(largest_remainder(10, std::vector<double>{0.7, 0.15, 0.15}) == std::vector<int>{7, 2, 1});
  CHECK(largest_remainder(100, std::vector<double>{0.7, 0.15, 0.15}) ==
        std::vector<int>{70, 15, 15});
  CHECK(largest_remainder(150, std::vector<double>{100, 200, 700}) ==
        std::vector<int>{15, 30, 105});
}

TEST_CASE("inner split honours ratios and stratifies") {
  const auto ds = testing::labelled_dataset({testing::labels(100, 11), testing::labels(10, 1)});
  const auto plan = inner_split(ds, kDefaultInnerRatios, 5);
  CHECK(set_counts(plan, ds, 1) == std::array<int, 3>{70, 15, 15});
  const auto small = set_counts(plan, ds, 2);
  CHECK(small[0] + small[1] + small[2] == 10);
  CHECK(small[0] == 7);
  // The positive of hospital 1 spread: each set holds about its share.
  int pos_train = 0;
  for (const auto& s : ds.stays)
    if (s.hospital_id == 1 && s.label == 1 && plan.stay_set.at(s.stay_id) == SetLabel::TrainSet)
      ++pos_train;
  CHECK(pos_train >= 7);
  CHECK(pos_train <= 8);
  CHECK(plan.stay_set == inner_split(ds, kDefaultInnerRatios, 5).stay_set);
  CHECK(plan.stay_set != inner_split(ds, kDefaultInnerRatios, 6).stay_set);
}

TEST_CASE("tiny hospitals go to the training set with a warning") {
  const auto ds = testing::labelled_dataset({testing::labels(2, 1), testing::labels(20, 3)});
  const auto plan = inner_split(ds);
  CHECK(set_counts(plan, ds, 1) == std::array<int, 3>{2, 0, 0});
  REQUIRE(plan.warnings.size() == 1);
  CHECK(plan.warnings[0].find("hospital 1") != std::string::npos);
}

TEST_CASE("inner ratios must sum to one") {
  const auto ds = testing::labelled_dataset({testing::labels(10, 1)});
  CHECK_THROWS_AS(inner_split(ds, Ratios{0.5, 0.2, 0.2}), ConfigError);
}

TEST_CASE("candidate assignment: larger candidate to test") {
  std::vector<std::vector<int>> sizes(10, testing::labels(100, 10));
  auto ds = testing::labelled_dataset(sizes);
  const auto inner = inner_split(ds);
  std::vector<RankEntry> ranked;
  for (HospitalId h = 1; h <= 10; ++h) ranked.push_back(candidate(h, h == 3 || h == 7));
  const auto plan = assign_candidates(ranked, ds, inner);
  CHECK(plan.env_split.at(3) == SplitLabel::TestEnv);
  CHECK(plan.env_split.at(7) == SplitLabel::ValEnv);
  CHECK(plan.achieved.train == doctest::Approx(0.8));
  CHECK(plan.achieved.val == doctest::Approx(0.1));
  CHECK(plan.achieved.test == doctest::Approx(0.1));

  std::vector<std::vector<int>> uneven{testing::labels(50, 5), testing::labels(80, 8),
                                       testing::labels(500, 50)};
  auto ds2 = testing::labelled_dataset(uneven);
  std::vector<RankEntry> r2{candidate(1, true), candidate(2, true), candidate(3, false)};
  const auto p2 = assign_candidates(r2, ds2, inner_split(ds2));
  CHECK(p2.env_split.at(2) == SplitLabel::TestEnv);
  CHECK(p2.env_split.at(1) == SplitLabel::ValEnv);
}

TEST_CASE("single candidate falls back to training validation sets") {
  auto ds = testing::labelled_dataset({testing::labels(40, 4), testing::labels(40, 4),
                                       testing::labels(40, 4)});
  std::vector<RankEntry> r{candidate(1, false), candidate(2, true), candidate(3, false)};
  const auto plan = assign_candidates(r, ds, inner_split(ds));
  CHECK(plan.env_split.at(2) == SplitLabel::TestEnv);
  CHECK(plan.val_fallback);
  CHECK_FALSE(plan.warnings.empty());
  std::vector<RankEntry> none{candidate(1, false)};
  CHECK_THROWS_AS(assign_candidates(none, ds, inner_split(ds)), ConfigError);
}

TEST_CASE("oversized candidates still give a total assignment") {
  auto ds = testing::labelled_dataset({testing::labels(40, 4), testing::labels(30, 4),
                                       testing::labels(30, 4)});
  std::vector<RankEntry> r{candidate(1, true), candidate(2, false), candidate(3, false)};
  const auto plan = assign_candidates(r, ds, inner_split(ds));
  CHECK(plan.env_split.size() == 3);
  CHECK(plan.achieved.test == doctest::Approx(0.4));
  CHECK_FALSE(plan.warnings.empty());
}

TEST_CASE("size-matched quotas") {
  CHECK(size_matched_quotas(std::vector<int>{100, 200, 700}, 150) == std::vector<int>{15, 30, 105});
  CHECK(size_matched_quotas(std::vector<int>{5, 7}, 12) == std::vector<int>{5, 7});
  // A tiny environment still contributes one stay.
  CHECK(size_matched_quotas(std::vector<int>{1, 1000}, 10) == std::vector<int>{1, 9});
  CHECK_THROWS_AS(size_matched_quotas(std::vector<int>{3}, 4), ConfigError);
}

TEST_CASE("resampling properties over random instances") {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const int n_env = 1 + static_cast<int>(rng.below(12));
    std::vector<int> avail(n_env);
    for (auto& a : avail) a = static_cast<int>(rng.below(300));
    const int total = std::accumulate(avail.begin(), avail.end(), 0);
    const int target = total == 0 ? 0 : static_cast<int>(rng.below(total + 1));
    const auto q = size_matched_quotas(avail, target);
    CHECK(std::accumulate(q.begin(), q.end(), 0) == target);
    const auto non_empty = std::count_if(avail.begin(), avail.end(), [](int a) { return a > 0; });
    for (int e = 0; e < n_env; ++e) {
      CHECK(q[e] <= avail[e]);
      if (target >= non_empty && avail[e] > 0) CHECK(q[e] >= 1);
    }
  }
}

TEST_CASE("resample mask keeps the quota per environment") {
  auto ds = testing::labelled_dataset({testing::labels(100, 10), testing::labels(200, 20),
                                       testing::labels(700, 70)});
  const auto plan = inner_split(ds, Ratios{1.0, 0.0, 0.0}, 1);
  const std::vector<HospitalId> envs{1, 2, 3};
  const auto mask = size_matched_resample(plan, ds, envs, 150, 9);
  std::array<int, 3> kept{0, 0, 0};
  for (const auto& [id, keep] : mask)
    if (keep) ++kept[id / 1000 - 1];
  CHECK(kept == std::array<int, 3>{15, 30, 105});
  CHECK(mask == size_matched_resample(plan, ds, envs, 150, 9));
  const auto all = size_matched_resample(plan, ds, envs, 1000, 9);
  CHECK(std::all_of(all.begin(), all.end(), [](const auto& kv) { return kv.second; }));
}

TEST_CASE("plan survives a JSON round trip") {
  auto ds = testing::labelled_dataset({testing::labels(20, 2), testing::labels(20, 2)});
  auto plan = inner_split(ds, kDefaultInnerRatios, 4);
  plan.env_split[2] = SplitLabel::TestEnv;
  const std::vector<HospitalId> envs{1};
  plan.subsample_masks["ERM"] = size_matched_resample(plan, ds, envs, 5, 2);
  const auto back = plan_from_json(plan_to_json(plan));
  CHECK(back.env_split == plan.env_split);
  CHECK(back.stay_set == plan.stay_set);
  CHECK(back.subsample_masks == plan.subsample_masks);
  CHECK(plan_to_json(back) == plan_to_json(plan));
  CHECK(format_environments(plan) == "TrainEnv: [1]\nValEnv: []\nTestEnv: [2]\n");
}
