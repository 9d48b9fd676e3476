#pragma once

// Adam, early stopping and the epoch loop.

#include "oodenv/model.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace oodenv {

/// Scalar type used for training runs inside the pipeline.
using TrainScalar = float;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ModelParams<Scalar> m;
  ModelParams<Scalar> v;
  std::int64_t step = 0;
};

/// All learnable parameters plus optimiser moments.
template <typename Scalar>
struct PredictorState {
  ModelConfig config;
  InputLayout layout;
  ModelParams<Scalar> params;
  AdamState<Scalar> adam;
};

template <typename Scalar>
AdamState<Scalar> make_adam_state(const ModelParams<Scalar>& like);

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads,
               AdamState<Scalar>& state, double lr, const AdamConfig& opt = {});

/// Patience-based stopping on a score that should increase. An epoch counts
/// as an improvement only if it beats the best score by more than `tolerance`.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience, double tolerance = 1e-6)
      : patience_(patience), tolerance_(tolerance) {}

  /// Records the score of the next epoch; returns true if it improved.
  bool update(double score);
  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  double tolerance_;
  double best_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int since_best_ = 0;
  int epochs_ = 0;
};

struct EpochRecord {
  int epoch = 0;           // 1-based
  double train_loss = 0.0;
  double val_score = 0.0;  // validation AUC, or minus the validation loss in fallback mode
  bool improved = false;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_score = 0.0;
  bool loss_fallback = false;  // validation set was single-class
  bool stopped_early = false;
  std::vector<std::string> warnings;
};

/// Generic epoch loop. `epoch_fn(epoch)` trains one epoch and returns
/// (train_loss, validation score); `on_improve(epoch)` is called whenever the
/// score improves so the caller can checkpoint.
TrainLog run_epochs(int max_epochs, int patience,
                    const std::function<std::pair<double, double>(int)>& epoch_fn,
                    const std::function<void(int)>& on_improve = {});

template <typename Scalar>
struct TrainResult {
  PredictorState<Scalar> state;  // parameters from the best validation epoch
  TrainLog log;
};

/// Trains with seeded shuffling, Adam and early stopping on validation AUC
/// (validation loss when the validation set is single-class). Throws
/// TrainingError on a non-finite loss, naming the epoch.
template <typename Scalar = TrainScalar>
TrainResult<Scalar> train(const ModelConfig& cfg, const InputLayout& layout,
                          std::span<const ModelInput> train_set,
                          std::span<const ModelInput> val_set);

/// Mean cross-entropy over a set.
template <typename Scalar>
double mean_loss(const SequenceClassifier<Scalar>& model, const ModelParams<Scalar>& params,
                 std::span<const ModelInput> inputs, int chunk = 256);

extern template TrainResult<float> train<float>(const ModelConfig&, const InputLayout&,
                                                std::span<const ModelInput>,
                                                std::span<const ModelInput>);
extern template TrainResult<double> train<double>(const ModelConfig&, const InputLayout&,
                                                  std::span<const ModelInput>,
                                                  std::span<const ModelInput>);

}  // namespace oodenv
