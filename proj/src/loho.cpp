#include "oodenv/loho.hpp"

#include "oodenv/csv.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/fit.hpp"
#include "oodenv/metrics.hpp"
#include "oodenv/parallel.hpp"
#include "oodenv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oodenv {

namespace {

constexpr std::uint64_t kBootIn = 0x21;
constexpr std::uint64_t kBootOut = 0x22;

const csv::Row kRankingHeader = {"hospital_id", "p_in",      "ci_in_lo",     "ci_in_hi",
                                 "p_out",       "ci_out_lo", "ci_out_hi",    "p_rank",
                                 "n_test_stays", "excluded", "is_candidate", "gap"};

bool single_class(const Dataset& ds, std::span<const std::size_t> idx) {
  bool pos = false, neg = false;
  for (auto i : idx) (ds.stays[i].label == 1 ? pos : neg) = true;
  return !(pos && neg);
}

}  // namespace

void LohoConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in (0, 1]");
  if (bootstrap_reps < 1) throw ConfigError("bootstrap_reps must be >= 1");
  model.validate();
}

LohoFold make_fold(const Dataset& ds, const PartitionPlan& inner, HospitalId held_out,
                   std::uint64_t base_seed) {
  LohoFold f;
  f.held_out = held_out;
  f.seed = derive_seed(base_seed, {static_cast<std::uint64_t>(held_out)});
  for (std::size_t i = 0; i < ds.stays.size(); ++i) {
    const auto& s = ds.stays[i];
    const auto it = inner.stay_set.find(s.stay_id);
    if (it == inner.stay_set.end()) throw DataError("stay " + std::to_string(s.stay_id) + " has no set");
    if (s.hospital_id == held_out) {
      if (it->second == SetLabel::TestSet) f.out_test.push_back(i);
      continue;
    }
    switch (it->second) {
      case SetLabel::TrainSet: f.train.push_back(i); break;
      case SetLabel::ValSet: f.val.push_back(i); break;
      case SetLabel::TestSet: f.in_test.push_back(i); break;
    }
  }
  return f;
}

void sort_ranking(std::vector<RankEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.excluded != b.excluded) return !a.excluded;
    if (a.p_rank() != b.p_rank()) return a.p_rank() > b.p_rank();
    return a.hospital_id < b.hospital_id;
  });
}

std::vector<RankEntry> run_loho(const Dataset& ds, const PartitionPlan& inner,
                                const LohoConfig& cfg, std::size_t workers,
                                std::vector<TrainLog>* logs) {
  cfg.validate();
  const auto ids = ds.hospital_ids();
  if (ids.size() < 2) throw DataError("leave-one-hospital-out needs at least 2 hospitals");
  std::vector<RankEntry> entries(ids.size());
  std::vector<TrainLog> fold_logs(ids.size());

  parallel_for(ids.size(), workers, [&](std::size_t k) {
    const auto fold = make_fold(ds, inner, ids[k], cfg.base_seed);
    RankEntry& e = entries[k];
    e.hospital_id = ids[k];
    e.n_test_stays = static_cast<int>(fold.out_test.size());
    if (single_class(ds, fold.out_test)) {
      e.excluded = true;
      fold_logs[k].warnings.push_back("held-out test set is single-class; fold excluded");
      return;
    }
    ModelConfig mc = cfg.model;
    mc.seed = fold.seed;
    auto fit = fit_and_predict(ds, fold.train, fold.val, {fold.in_test, fold.out_test}, mc);
    const auto in = bootstrap_ci(fit.evals[0].scores, fit.evals[0].labels, cfg.bootstrap_reps,
                                 0.95, derive_seed(fold.seed, {kBootIn}));
    const auto out = bootstrap_ci(fit.evals[1].scores, fit.evals[1].labels, cfg.bootstrap_reps,
                                  0.95, derive_seed(fold.seed, {kBootOut}));
    e.p_in = in.value;
    e.ci_in_lo = in.ci_lo;
    e.ci_in_hi = in.ci_hi;
    e.p_out = out.value;
    e.ci_out_lo = out.ci_lo;
    e.ci_out_hi = out.ci_hi;
    fold_logs[k] = std::move(fit.log);
  });

  if (logs) *logs = std::move(fold_logs);
  sort_ranking(entries);
  return entries;
}

void select_candidates(std::vector<RankEntry>& entries, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in (0, 1]");
  sort_ranking(entries);
  const auto k = std::count_if(entries.begin(), entries.end(),
                               [](const RankEntry& e) { return !e.excluded; });
  if (k == 0) throw DataError("no non-excluded ranking entries");
  // Guard against 0.2 * 10 evaluating to 2.0000000000000004.
  const auto n = static_cast<std::ptrdiff_t>(std::ceil(threshold * static_cast<double>(k) - 1e-9));
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(entries.size()); ++i)
    entries[i].is_candidate = !entries[i].excluded && i < n;
}

std::string ranking_to_csv(std::span<const RankEntry> entries) {
  std::ostringstream out;
  out << csv::join(kRankingHeader) << '\n';
  auto num = [](double v) { return csv::format_double(v); };
  for (const auto& e : entries) {
    const bool def = e.p_out.has_value();
    out << csv::join({std::to_string(e.hospital_id), def ? num(e.p_in) : "",
                      def ? num(e.ci_in_lo) : "", def ? num(e.ci_in_hi) : "",
                      def ? num(*e.p_out) : "", def ? num(e.ci_out_lo) : "",
                      def ? num(e.ci_out_hi) : "", def ? num(e.p_rank()) : "",
                      std::to_string(e.n_test_stays), e.excluded ? "true" : "false",
                      e.is_candidate ? "true" : "false", def ? num(e.gap()) : ""})
        << '\n';
  }
  return out.str();
}

std::vector<RankEntry> ranking_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RankEntry> out;
  bool header = true;
  auto num = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw DataError("bad number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      throw DataError("bad number '" + s + "' in ranking");
    }
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto r = csv::split_line(line);
    if (header) {
      if (r != kRankingHeader) throw DataError("ranking header mismatch");
      header = false;
      continue;
    }
    if (r.size() != kRankingHeader.size()) throw DataError("ranking row has wrong field count");
    RankEntry e;
    e.hospital_id = static_cast<HospitalId>(num(r[0]));
    e.n_test_stays = static_cast<int>(num(r[8]));
    e.excluded = r[9] == "true";
    e.is_candidate = r[10] == "true";
    if (!r[4].empty()) {
      e.p_in = num(r[1]);
      e.ci_in_lo = num(r[2]);
      e.ci_in_hi = num(r[3]);
      e.p_out = num(r[4]);
      e.ci_out_lo = num(r[5]);
      e.ci_out_hi = num(r[6]);
    }
    out.push_back(e);
  }
  if (header) throw DataError("ranking file is empty");
  return out;
}

}  // namespace oodenv
