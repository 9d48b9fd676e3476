#pragma once

#include "oodenv/core.hpp"

#include <optional>

namespace oodenv {

/// Outcome of one leave-one-hospital-out fold.
struct RankEntry {
  HospitalId hospital_id = 0;
  double p_in = 0.0;                 // AUC on the pooled test sets of the training hospitals
  std::optional<double> p_out;       // AUC on the held-out hospital's test set
  double ci_in_lo = 0.0, ci_in_hi = 0.0;
  double ci_out_lo = 0.0, ci_out_hi = 0.0;
  int n_test_stays = 0;
  bool excluded = false;             // held-out test set was single-class
  bool is_candidate = false;

  /// In-domain minus out-of-domain AUC; 0 for excluded entries.
  double p_rank() const { return p_out ? p_in - *p_out : 0.0; }
  /// Out-of-domain minus in-domain AUC (the negated rank score).
  double gap() const { return p_out ? *p_out - p_in : 0.0; }
};

}  // namespace oodenv
