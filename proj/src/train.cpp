#include "oodenv/train.hpp"

#include "oodenv/errors.hpp"
#include "oodenv/metrics.hpp"
#include "oodenv/rng.hpp"

#include <cmath>
#include <numeric>

namespace oodenv {

namespace {

template <typename Scalar>
std::vector<std::pair<Scalar*, Eigen::Index>> tensors(ModelParams<Scalar>& p) {
  std::vector<std::pair<Scalar*, Eigen::Index>> out;
  p.visit([&](std::string_view, Scalar* d, Eigen::Index n) { out.emplace_back(d, n); });
  return out;
}

template <typename Scalar>
std::vector<std::pair<const Scalar*, Eigen::Index>> tensors(const ModelParams<Scalar>& p) {
  std::vector<std::pair<const Scalar*, Eigen::Index>> out;
  p.visit([&](std::string_view, const Scalar* d, Eigen::Index n) { out.emplace_back(d, n); });
  return out;
}

bool has_both_classes(std::span<const ModelInput> set) {
  bool pos = false, neg = false;
  for (const auto& m : set) (m.label == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

template <typename Scalar>
AdamState<Scalar> make_adam_state(const ModelParams<Scalar>& like) {
  AdamState<Scalar> s{like, like, 0};
  s.m.set_zero();
  s.v.set_zero();
  return s;
}

template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads,
               AdamState<Scalar>& state, double lr, const AdamConfig& opt) {
  ++state.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  const Scalar b1 = Scalar(opt.beta1), b2 = Scalar(opt.beta2);
  const Scalar step_size = Scalar(lr / c1);
  const Scalar inv_sqrt_c2 = Scalar(1.0 / std::sqrt(c2));
  const Scalar eps = Scalar(opt.epsilon);

  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto n = p[i].second;
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> pa(p[i].first, n), ma(m[i].first, n),
        va(v[i].first, n);
    Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> ga(g[i].first, n);
    ma = b1 * ma + (Scalar(1) - b1) * ga;
    va = b2 * va + (Scalar(1) - b2) * ga.square();
    pa -= step_size * ma / (va.sqrt() * inv_sqrt_c2 + eps);
  }
}

bool EarlyStopping::update(double score) {
  ++epochs_;
  if (score > best_ + tolerance_) {
    best_ = score;
    best_epoch_ = epochs_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

TrainLog run_epochs(int max_epochs, int patience,
                    const std::function<std::pair<double, double>(int)>& epoch_fn,
                    const std::function<void(int)>& on_improve) {
  TrainLog log;
  EarlyStopping stopper(patience);
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const auto [loss, score] = epoch_fn(epoch);
    const bool improved = stopper.update(score);
    log.epochs.push_back({epoch, loss, score, improved});
    if (improved && on_improve) on_improve(epoch);
    if (stopper.should_stop()) {
      log.stopped_early = epoch < max_epochs;
      break;
    }
  }
  log.best_epoch = stopper.best_epoch();
  log.best_val_score = stopper.best_score();
  return log;
}

template <typename Scalar>
double mean_loss(const SequenceClassifier<Scalar>& model, const ModelParams<Scalar>& params,
                 std::span<const ModelInput> inputs, int chunk) {
  if (inputs.empty()) return 0.0;
  const Eigen::VectorXd p1 = predict_positive(model, params, inputs, chunk);
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double p = inputs[i].label == 1 ? p1[i] : 1.0 - p1[i];
    total -= std::log(std::max(p, 1e-300));
  }
  return total / static_cast<double>(inputs.size());
}

template <typename Scalar>
TrainResult<Scalar> train(const ModelConfig& cfg, const InputLayout& layout,
                          std::span<const ModelInput> train_set,
                          std::span<const ModelInput> val_set) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty training set");
  if (val_set.empty()) throw DataError("train: empty validation set");

  SequenceClassifier<Scalar> model(cfg, layout);
  TrainResult<Scalar> result;
  result.state.config = cfg;
  result.state.layout = layout;
  result.state.params = model.init_params(derive_seed(cfg.seed, {1}));
  result.state.adam = make_adam_state(result.state.params);

  const bool use_auc = has_both_classes(val_set);
  Eigen::VectorXi val_labels(val_set.size());
  for (std::size_t i = 0; i < val_set.size(); ++i) val_labels[i] = val_set[i].label;

  auto& params = result.state.params;
  auto& adam = result.state.adam;
  PredictorState<Scalar> best = result.state;
  ModelParams<Scalar> grads = model.zero_params();
  std::vector<std::size_t> order(train_set.size());
  std::vector<const ModelInput*> batch;

  auto epoch_fn = [&](int epoch) -> std::pair<double, double> {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed, {2, static_cast<std::uint64_t>(epoch)});
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      const Scalar loss = model.loss_and_grads(params, batch, grads);
      if (!std::isfinite(static_cast<double>(loss)))
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
      loss_sum += static_cast<double>(loss) * static_cast<double>(end - start);
      adam_step(params, grads, adam, cfg.learning_rate);
    }
    double score;
    if (use_auc)
      score = auc_roc(predict_positive(model, params, val_set), val_labels);
    else
      score = -mean_loss(model, params, val_set);
    return {loss_sum / static_cast<double>(order.size()), score};
  };

  result.log = run_epochs(cfg.max_epochs, cfg.patience, epoch_fn,
                          [&](int) { best = result.state; });
  result.log.loss_fallback = !use_auc;
  if (!use_auc)
    result.log.warnings.push_back(
        "validation set is single-class; early stopping on validation loss");
  result.state = std::move(best);
  return result;
}

template AdamState<float> make_adam_state<float>(const ModelParams<float>&);
template AdamState<double> make_adam_state<double>(const ModelParams<double>&);
template void adam_step<float>(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&,
                               double, const AdamConfig&);
template void adam_step<double>(ModelParams<double>&, const ModelParams<double>&,
                                AdamState<double>&, double, const AdamConfig&);
template double mean_loss<float>(const SequenceClassifier<float>&, const ModelParams<float>&,
                                 std::span<const ModelInput>, int);
template double mean_loss<double>(const SequenceClassifier<double>&, const ModelParams<double>&,
                                  std::span<const ModelInput>, int);
template TrainResult<float> train<float>(const ModelConfig&, const InputLayout&,
                                         std::span<const ModelInput>, std::span<const ModelInput>);
template TrainResult<double> train<double>(const ModelConfig&, const InputLayout&,
                                           std::span<const ModelInput>,
                                           std::span<const ModelInput>);

}  // namespace oodenv
