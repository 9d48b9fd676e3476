#include "doctest.h"

#include "helpers.hpp"
#include "oodenv/datagen.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/loho.hpp"

#include <algorithm>
#include <set>

using namespace oodenv;

namespace {

std::vector<RankEntry> ranked(const std::vector<double>& p_rank) {
  std::vector<RankEntry> out;
  for (std::size_t i = 0; i < p_rank.size(); ++i) {
    RankEntry e;
    e.hospital_id = static_cast<HospitalId>(i + 1);
    e.p_in = 0.9;
    e.p_out = 0.9 - p_rank[i];
    out.push_back(e);
  }
  return out;
}

std::set<HospitalId> candidates(const std::vector<RankEntry>& e) {
  std::set<HospitalId> out;
  for (const auto& r : e)
    if (r.is_candidate) out.insert(r.hospital_id);
  return out;
}

}  // namespace

TEST_CASE("candidates are the largest gaps") {
  auto e = ranked({0.12, 0.30, 0.15, 0.20, 0.10, 0.08, 0.05, 0.03, 0.02, 0.01});
  select_candidates(e, 0.2);
  CHECK(candidates(e) == std::set<HospitalId>{2, 4});
  CHECK(e.front().hospital_id == 2);
  for (const auto& r : e) CHECK(r.p_rank() == -r.gap());

  select_candidates(e, 1.0);
  CHECK(candidates(e).size() == 10);

  auto neg = ranked({0.3, 0.2, -0.4, 0.1, 0.0});
  select_candidates(neg, 0.2);
  CHECK_FALSE(candidates(neg).count(3));

  CHECK_THROWS_AS(select_candidates(e, 1.5), ConfigError);
  CHECK_THROWS_AS(select_candidates(e, 0.0), ConfigError);
}

TEST_CASE("excluded entries are never candidates and sort last") {
  auto e = ranked({0.1, 0.2, 0.3});
  e[2].excluded = true;
  e[2].p_out.reset();
  select_candidates(e, 1.0);
  CHECK(e.back().hospital_id == 3);
  CHECK_FALSE(e.back().is_candidate);
  CHECK(candidates(e) == std::set<HospitalId>{1, 2});
}

TEST_CASE("folds never see the held-out hospital") {
  const auto ds = testing::labelled_dataset(
      {testing::labels(30, 5), testing::labels(20, 4), testing::labels(25, 5)});
  const auto inner = inner_split(ds, kDefaultInnerRatios, 2);
  for (HospitalId m : ds.hospital_ids()) {
    const auto f = make_fold(ds, inner, m, 0);
    for (const auto* part : {&f.train, &f.val, &f.in_test})
      for (auto i : *part) CHECK(ds.stays[i].hospital_id != m);
    for (auto i : f.out_test) {
      CHECK(ds.stays[i].hospital_id == m);
      CHECK(inner.stay_set.at(ds.stays[i].stay_id) == SetLabel::TestSet);
    }
    CHECK(f.seed == make_fold(ds, inner, m, 0).seed);
    CHECK(f.seed != make_fold(ds, inner, m, 1).seed);
  }
}

TEST_CASE("ranking survives a CSV round trip") {
  auto e = ranked({0.25, 0.05, -0.1});
  e[1].ci_in_lo = 0.81;
  e[2].excluded = true;
  e[2].p_out.reset();
  select_candidates(e, 0.3);
  const auto csv = ranking_to_csv(e);
  CHECK(csv.rfind("hospital_id,p_in,ci_in_lo,ci_in_hi,p_out,ci_out_lo,ci_out_hi,p_rank,"
                  "n_test_stays,excluded,is_candidate",
                  0) == 0);
  const auto back = ranking_from_csv(csv);
  REQUIRE(back.size() == e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(back[i].hospital_id == e[i].hospital_id);
    CHECK(back[i].p_out == e[i].p_out);
    CHECK(back[i].is_candidate == e[i].is_candidate);
    CHECK(back[i].excluded == e[i].excluded);
  }
  CHECK(ranking_to_csv(back) == csv);
}

TEST_CASE("two hospitals give two folds trained on each other") {
  GenConfig g;
  g.n_hospitals = 2;
  g.min_stays = 60;
  g.max_stays = 60;
  g.steps = 4;
  g.base_prevalence = 0.3;
  g.seed = 1;
  const auto ds = generate(g).first;
  const auto inner = inner_split(ds, kDefaultInnerRatios, 1);
  LohoConfig cfg;
  cfg.model.max_epochs = 2;
  cfg.bootstrap_reps = 20;
  std::vector<TrainLog> logs;
  const auto a = run_loho(ds, inner, cfg, 1, &logs);
  REQUIRE(a.size() == 2);
  CHECK(logs.size() == 2);
  const auto b = run_loho(ds, inner, cfg, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].hospital_id == b[i].hospital_id);
    CHECK(a[i].p_in == b[i].p_in);
    CHECK(a[i].p_out == b[i].p_out);
    CHECK(a[i].ci_out_lo == b[i].ci_out_lo);
  }
}

TEST_CASE("single-class held-out test set excludes the fold") {
  const auto ds = testing::labelled_dataset(
      {testing::labels(20, 0), testing::labels(20, 5), testing::labels(20, 5)});
  const auto inner = inner_split(ds, kDefaultInnerRatios, 0);
  LohoConfig cfg;
  cfg.model.max_epochs = 1;
  cfg.bootstrap_reps = 10;
  const auto e = run_loho(ds, inner, cfg, 1);
  const auto it = std::find_if(e.begin(), e.end(), [](const RankEntry& r) { return r.hospital_id == 1; });
  REQUIRE(it != e.end());
  CHECK(it->excluded);
  CHECK_FALSE(it->p_out.has_value());
  CHECK(e.back().hospital_id == 1);
}
