#pragma once

// Leave-one-hospital-out ranking: one model per held-out hospital, scored in
// domain and out of domain, ranked by the difference.

#include "oodenv/core.hpp"
#include "oodenv/model.hpp"
#include "oodenv/partition.hpp"
#include "oodenv/rank_entry.hpp"
#include "oodenv/train.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oodenv {

struct LohoConfig {
  double threshold = 0.20;  // quantile of hospitals that become candidates
  ModelConfig model = ModelConfig::small();
  int bootstrap_reps = 500;
  std::uint64_t base_seed = 0;

  void validate() const;
};

/// Dataset indices used by the fold that holds out `held_out`.
struct LohoFold {
  HospitalId held_out = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train, val, in_test, out_test;
};

LohoFold make_fold(const Dataset& ds, const PartitionPlan& inner, HospitalId held_out,
                   std::uint64_t base_seed);

/// Trains every fold on a pool of `workers` threads (0 = all cores) and
/// returns entries sorted by p_rank descending, excluded entries last.
/// Candidate flags are not set. Training logs are written per hospital,
/// in hospital-id order, when `logs` is given.
std::vector<RankEntry> run_loho(const Dataset& ds, const PartitionPlan& inner,
                                const LohoConfig& cfg, std::size_t workers = 0,
                                std::vector<TrainLog>* logs = nullptr);

/// Marks the ceil(T * K) non-excluded entries with the largest p_rank as
/// candidates, K being the number of non-excluded entries. Entries are
/// re-sorted into ranking order.
void select_candidates(std::vector<RankEntry>& entries, double threshold);

/// Ranking order: p_rank descending, excluded last, ties by hospital id.
void sort_ranking(std::vector<RankEntry>& entries);

std::string ranking_to_csv(std::span<const RankEntry> entries);
std::vector<RankEntry> ranking_from_csv(const std::string& text);

}  // namespace oodenv
