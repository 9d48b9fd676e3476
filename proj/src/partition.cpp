#include "oodenv/partition.hpp"

#include "oodenv/errors.hpp"
#include "oodenv/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace oodenv {

namespace {

constexpr std::uint64_t kInnerStream = 0x1a;
constexpr std::uint64_t kResampleStream = 0x1b;

}  // namespace

void Ratios::validate(std::string_view what) const {
  for (double r : as_array())
    if (!(r >= 0.0)) throw ConfigError(std::string(what) + " must be non-negative");
  if (std::abs(train + val + test - 1.0) > 1e-9)
    throw ConfigError(std::string(what) + " must sum to 1");
}

std::vector<HospitalId> PartitionPlan::environments(SplitLabel split) const {
  std::vector<HospitalId> out;
  for (const auto& [id, s] : env_split)
    if (s == split) out.push_back(id);
  return out;
}

std::vector<std::size_t> PartitionPlan::select(const Dataset& ds,
                                               std::span<const SplitLabel> splits,
                                               SetLabel set) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.stays.size(); ++i) {
    const auto& s = ds.stays[i];
    const auto env = env_split.find(s.hospital_id);
    if (env == env_split.end()) continue;
    if (std::find(splits.begin(), splits.end(), env->second) == splits.end()) continue;
    const auto it = stay_set.find(s.stay_id);
    if (it != stay_set.end() && it->second == set) out.push_back(i);
  }
  return out;
}

std::vector<int> largest_remainder(int total, std::span<const double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> out(weights.size(), 0);
  if (weights.empty() || total <= 0 || sum <= 0.0) return out;
  std::vector<double> rem(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / sum;
    out[i] = static_cast<int>(std::floor(exact + 1e-9));
    rem[i] = exact - out[i];
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size(), ++assigned)
    ++out[order[k]];
  return out;
}

PartitionPlan inner_split(const Dataset& ds, Ratios ratios, std::uint64_t seed) {
  ratios.validate("inner ratios");
  PartitionPlan plan;
  plan.inner_ratios = ratios;
  plan.seed = seed;
  const auto weights = ratios.as_array();
  for (const auto& [hid, idx] : ds.stays_by_hospital()) {
    const int n = static_cast<int>(idx.size());
    if (n < 3) {
      for (auto i : idx) plan.stay_set[ds.stays[i].stay_id] = SetLabel::TrainSet;
      plan.warnings.push_back("hospital " + std::to_string(hid) + " has " + std::to_string(n) +
                              " stays; all assigned to TrainSet");
      continue;
    }
    const auto quota = largest_remainder(n, weights);
    Rng rng(seed, {kInnerStream, static_cast<std::uint64_t>(hid)});
    std::vector<std::size_t> pos, neg;
    for (auto i : idx) (ds.stays[i].label == 1 ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    // Deal positives first, then negatives, always to the set furthest behind
    // its proportional share; this keeps both classes spread like the quotas.
    std::array<int, 3> assigned{0, 0, 0};
    int dealt = 0;
    for (const auto* group : {&pos, &neg}) {
      for (auto i : *group) {
        ++dealt;
        int best = -1;
        double best_deficit = 0.0;
        for (int s = 0; s < 3; ++s) {
          if (assigned[s] >= quota[s]) continue;
          const double deficit = static_cast<double>(quota[s]) * dealt / n - assigned[s];
          if (best < 0 || deficit > best_deficit + 1e-12) {
            best = s;
            best_deficit = deficit;
          }
        }
        ++assigned[best];
        plan.stay_set[ds.stays[i].stay_id] = static_cast<SetLabel>(best);
      }
    }
  }
  for (const auto& [hid, meta] : ds.hospitals) plan.env_split.emplace(hid, SplitLabel::TrainEnv);
  return plan;
}

PartitionPlan assign_candidates(std::span<const RankEntry> ranked, const Dataset& ds,
                                PartitionPlan plan, Ratios targets) {
  targets.validate("split targets");
  std::map<HospitalId, int> size;
  for (const auto& s : ds.stays) ++size[s.hospital_id];
  std::vector<HospitalId> candidates;
  for (const auto& e : ranked)
    if (e.is_candidate) candidates.push_back(e.hospital_id);
  if (candidates.empty()) throw ConfigError("candidate list is empty");
  std::stable_sort(candidates.begin(), candidates.end(), [&](HospitalId a, HospitalId b) {
    return size[a] != size[b] ? size[a] > size[b] : a < b;
  });

  const double total = static_cast<double>(ds.stays.size());
  plan.env_split.clear();
  for (const auto& [hid, meta] : ds.hospitals) plan.env_split[hid] = SplitLabel::TrainEnv;
  double test_count = 0.0;
  for (auto hid : candidates) {
    if (test_count == 0.0 || test_count < targets.test * total) {
      plan.env_split[hid] = SplitLabel::TestEnv;
      test_count += size[hid];
    } else {
      plan.env_split[hid] = SplitLabel::ValEnv;
    }
  }

  std::array<double, 3> count{0, 0, 0};
  for (const auto& [hid, split] : plan.env_split) count[static_cast<int>(split)] += size[hid];
  plan.achieved = {count[0] / total, count[1] / total, count[2] / total};
  plan.val_fallback = count[1] == 0.0 && plan.environments(SplitLabel::ValEnv).empty();
  if (plan.val_fallback)
    plan.warnings.push_back(
        "no validation environment; validation falls back to the ValSets of the training "
        "environments");
  const auto want = targets.as_array();
  const auto got = plan.achieved.as_array();
  for (int s = 0; s < 3; ++s) {
    if (std::abs(got[s] - want[s]) > 0.05) {
      std::ostringstream msg;
      msg << "achieved " << to_string(static_cast<SplitLabel>(s)) << " fraction " << got[s]
          << " deviates from target " << want[s];
      plan.warnings.push_back(msg.str());
    }
  }
  return plan;
}

std::vector<int> size_matched_quotas(std::span<const int> available, int target) {
  const int total = std::accumulate(available.begin(), available.end(), 0);
  if (target < 0) throw ConfigError("resampling target must be non-negative");
  if (target > total)
    throw ConfigError("resampling target " + std::to_string(target) + " exceeds the " +
                      std::to_string(total) + " available training stays");
  std::vector<double> w(available.begin(), available.end());
  auto quota = largest_remainder(target, w);
  const auto non_empty = std::count_if(available.begin(), available.end(), [](int a) { return a > 0; });
  if (target >= non_empty) {
    for (std::size_t i = 0; i < quota.size(); ++i) {
      if (available[i] == 0 || quota[i] > 0) continue;
      // Take one stay from the largest quota that can spare it.
      std::size_t donor = quota.size();
      for (std::size_t j = 0; j < quota.size(); ++j)
        if (quota[j] > 1 && (donor == quota.size() || quota[j] > quota[donor])) donor = j;
      if (donor == quota.size()) break;
      --quota[donor];
      ++quota[i];
    }
  }
  return quota;
}

SubsampleMask size_matched_resample(const PartitionPlan& plan, const Dataset& ds,
                                    std::span<const HospitalId> envs, int target_size,
                                    std::uint64_t seed) {
  const auto by_hospital = ds.stays_by_hospital();
  std::vector<std::vector<StayId>> pools;
  std::vector<int> available;
  for (auto hid : envs) {
    std::vector<StayId> pool;
    if (auto it = by_hospital.find(hid); it != by_hospital.end())
      for (auto i : it->second) {
        const auto set = plan.stay_set.find(ds.stays[i].stay_id);
        if (set != plan.stay_set.end() && set->second == SetLabel::TrainSet)
          pool.push_back(ds.stays[i].stay_id);
      }
    available.push_back(static_cast<int>(pool.size()));
    pools.push_back(std::move(pool));
  }
  const auto quota = size_matched_quotas(available, target_size);
  SubsampleMask mask;
  for (std::size_t e = 0; e < pools.size(); ++e) {
    auto& pool = pools[e];
    Rng rng(seed, {kResampleStream, static_cast<std::uint64_t>(envs[e])});
    // Partial Fisher-Yates: the first quota[e] entries form the sample.
    for (int k = 0; k < quota[e]; ++k) {
      const auto j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    for (std::size_t k = 0; k < pool.size(); ++k) mask[pool[k]] = static_cast<int>(k) < quota[e];
  }
  return mask;
}

std::string plan_to_json(const PartitionPlan& plan) {
  using nlohmann::json;
  json j;
  j["seed"] = plan.seed;
  j["inner_ratios"] = {plan.inner_ratios.train, plan.inner_ratios.val, plan.inner_ratios.test};
  j["achieved"] = {plan.achieved.train, plan.achieved.val, plan.achieved.test};
  j["val_fallback"] = plan.val_fallback;
  json env = json::object();
  for (const auto& [id, s] : plan.env_split) env[std::to_string(id)] = to_string(s);
  j["env_split"] = env;
  json sets = json::object();
  for (const auto& [id, s] : plan.stay_set) sets[std::to_string(id)] = to_string(s);
  j["stay_set"] = sets;
  json masks = json::object();
  for (const auto& [name, mask] : plan.subsample_masks) {
    std::vector<StayId> kept, dropped;
    for (const auto& [id, keep] : mask) (keep ? kept : dropped).push_back(id);
    masks[name] = {{"kept", kept}, {"dropped", dropped}};
  }
  j["subsample_masks"] = masks;
  j["warnings"] = plan.warnings;
  return j.dump(1) + "\n";
}

PartitionPlan plan_from_json(const std::string& text) {
  using nlohmann::json;
  PartitionPlan plan;
  try {
    const auto j = json::parse(text);
    plan.seed = j.at("seed").get<std::uint64_t>();
    const auto r = j.at("inner_ratios").get<std::vector<double>>();
    const auto a = j.at("achieved").get<std::vector<double>>();
    if (r.size() != 3 || a.size() != 3) throw DataError("ratio arrays must have 3 entries");
    plan.inner_ratios = {r[0], r[1], r[2]};
    plan.achieved = {a[0], a[1], a[2]};
    plan.val_fallback = j.at("val_fallback").get<bool>();
    for (const auto& [k, v] : j.at("env_split").items())
      plan.env_split[std::stoll(k)] = parse_split_label(v.get<std::string>());
    for (const auto& [k, v] : j.at("stay_set").items())
      plan.stay_set[std::stoll(k)] = parse_set_label(v.get<std::string>());
    for (const auto& [name, m] : j.at("subsample_masks").items()) {
      auto& mask = plan.subsample_masks[name];
      for (auto id : m.at("kept").get<std::vector<StayId>>()) mask[id] = true;
      for (auto id : m.at("dropped").get<std::vector<StayId>>()) mask[id] = false;
    }
    plan.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

std::string format_environments(const PartitionPlan& plan) {
  std::ostringstream out;
  for (auto split : {SplitLabel::TrainEnv, SplitLabel::ValEnv, SplitLabel::TestEnv}) {
    out << to_string(split) << ": [";
    const auto ids = plan.environments(split);
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? ", " : "") << ids[i];
    out << "]\n";
  }
  return out.str();
}

}  // namespace oodenv
