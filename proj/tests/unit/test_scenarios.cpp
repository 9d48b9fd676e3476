#include "doctest.h"

#include "helpers.hpp"
#include "oodenv/datagen.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/scenarios.hpp"

#include <algorithm>
#include <set>

using namespace oodenv;

namespace {

std::set<StayId> ids(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::set<StayId> out;
  for (auto i : idx) out.insert(ds.stays[i].stay_id);
  return out;
}

PartitionPlan toy_plan(const Dataset& ds) {
  auto plan = inner_split(ds, kDefaultInnerRatios, 3);
  plan.env_split = {{1, SplitLabel::TrainEnv}, {2, SplitLabel::ValEnv}, {3, SplitLabel::TestEnv}};
  return plan;
}

}  // namespace

TEST_CASE("scenario compositions on a toy plan") {
  const auto ds = testing::labelled_dataset(
      {testing::labels(10, 2), testing::labels(10, 2), testing::labels(10, 2)});
  const auto plan = toy_plan(ds);
  const auto erm = build_scenario_data(plan, ds, ScenarioKind::Erm);
  const auto id = build_scenario_data(plan, ds, ScenarioKind::ErmId);
  const auto merged = build_scenario_data(plan, ds, ScenarioKind::ErmMerged);
  CHECK(erm.train.size() == 7);
  CHECK(id.train.size() == 7);
  CHECK(merged.train.size() == 21);
  CHECK(erm.eval.size() >= 1);
  CHECK(erm.eval.size() <= 2);
  CHECK(ids(ds, erm.eval) == ids(ds, id.eval));
  CHECK(ids(ds, erm.eval) == ids(ds, merged.eval));
  for (const auto* d : {&erm, &id, &merged}) {
    const auto train = ids(ds, d->train), eval = ids(ds, d->eval);
    for (auto s : eval) CHECK_FALSE(train.count(s));
  }
  for (auto i : erm.train) CHECK(ds.stays[i].hospital_id == 1);
  for (auto i : erm.val) CHECK(ds.stays[i].hospital_id == 2);
  for (auto i : id.val) CHECK(ds.stays[i].hospital_id == 3);
}

TEST_CASE("resampled variant matches the ERMID size") {
  const auto ds = testing::labelled_dataset({testing::labels(200, 20), testing::labels(100, 10),
                                             testing::labels(40, 4), testing::labels(300, 30)});
  auto plan = inner_split(ds, kDefaultInnerRatios, 3);
  plan.env_split = {{1, SplitLabel::TrainEnv}, {2, SplitLabel::TrainEnv},
                    {3, SplitLabel::TestEnv}, {4, SplitLabel::ValEnv}};
  CHECK_THROWS_AS(build_scenario_data(plan, ds, ScenarioKind::Erm, Variant::Resampled), ConfigError);
  plan = with_resampling(plan, ds, 5);
  const auto target = build_scenario_data(plan, ds, ScenarioKind::ErmId).train.size();
  for (auto kind : kAllScenarioKinds) {
    const auto d = build_scenario_data(plan, ds, kind, Variant::Resampled);
    CHECK(d.train.size() == target);
  }
  std::set<HospitalId> merged_envs;
  for (auto i : build_scenario_data(plan, ds, ScenarioKind::ErmMerged, Variant::Resampled).train)
    merged_envs.insert(ds.stays[i].hospital_id);
  CHECK(merged_envs.size() == 4);
}

TEST_CASE("empty evaluation set is an error") {
  const auto ds = testing::labelled_dataset({testing::labels(10, 2), testing::labels(10, 2)});
  auto plan = inner_split(ds);
  CHECK_THROWS_AS(build_scenario_data(plan, ds, ScenarioKind::Erm), DataError);
}

TEST_CASE("comparison shares one evaluation set and renders tables") {
  GenConfig g;
  g.n_hospitals = 3;
  g.min_stays = 60;
  g.max_stays = 60;
  g.steps = 4;
  g.base_prevalence = 0.3;
  g.seed = 4;
  const auto ds = generate(g).first;
  auto plan = with_resampling(toy_plan(ds), ds, 1);
  ScenarioConfig cfg;
  cfg.seeds = {0, 1};
  cfg.max_epochs = 2;
  cfg.bootstrap_reps = 20;
  const auto runs = run_comparison(ds, plan, cfg, 2);
  CHECK(runs.size() == 12);
  for (const auto& r : runs) CHECK(r.eval_ids == runs.front().eval_ids);

  const auto csv = scenarios_to_csv(runs);
  CHECK(csv.rfind("kind,variant,preset,seed,train_size,auc,ci_lo,ci_hi\n", 0) == 0);
  const auto back = scenarios_from_csv(csv);
  CHECK(scenarios_to_csv(back) == csv);

  const auto table = comparison_table(runs);
  CHECK(table.find("| ERMID |") != std::string::npos);
  CHECK(table.find("(±") != std::string::npos);
  CHECK(table.find(format_ci(runs[0].eval.value, runs[0].eval.ci_lo, runs[0].eval.ci_hi)) !=
        std::string::npos);

  const auto rows = summarize(runs);
  for (const auto& row : rows) {
    CHECK(row.n_seeds == 2);
    if (row.kind == ScenarioKind::Erm) CHECK(row.delta == 0.0);
  }
}
