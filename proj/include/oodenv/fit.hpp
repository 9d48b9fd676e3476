#pragma once

// Preprocess, train and score in one step, shared by the LOHO folds and the
// scenario runs.

#include "oodenv/core.hpp"
#include "oodenv/model.hpp"
#include "oodenv/train.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace oodenv {

struct ScoredSet {
  Eigen::VectorXd scores;  // class-1 probabilities
  Eigen::VectorXi labels;
};

struct FitResult {
  TrainLog log;
  std::vector<ScoredSet> evals;  // one per requested evaluation set, in order
};

/// Fits fill values and scaler on `train_idx`, trains with early stopping on
/// `val_idx` and scores every evaluation set with the best-epoch parameters.
FitResult fit_and_predict(const Dataset& ds, std::span<const std::size_t> train_idx,
                          std::span<const std::size_t> val_idx,
                          const std::vector<std::vector<std::size_t>>& eval_idx,
                          const ModelConfig& cfg);

}  // namespace oodenv
