#include "oodenv/fit.hpp"

#include "oodenv/preprocess.hpp"

namespace oodenv {

FitResult fit_and_predict(const Dataset& ds, std::span<const std::size_t> train_idx,
                          std::span<const std::size_t> val_idx,
                          const std::vector<std::vector<std::size_t>>& eval_idx,
                          const ModelConfig& cfg) {
  const auto prep = fit_preprocessor(ds, train_idx);
  const auto train_set = encode(ds, train_idx, prep);
  const auto val_set = encode(ds, val_idx, prep);
  const auto layout = InputLayout::from_schema(ds.schema);
  auto trained = train<TrainScalar>(cfg, layout, train_set, val_set);

  FitResult out;
  out.log = std::move(trained.log);
  const SequenceClassifier<TrainScalar> model(cfg, layout);
  for (const auto& idx : eval_idx) {
    const auto inputs = encode(ds, idx, prep);
    ScoredSet s;
    s.scores = predict_positive(model, trained.state.params, inputs);
    s.labels.resize(static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i) s.labels[static_cast<Eigen::Index>(i)] = inputs[i].label;
    out.evals.push_back(std::move(s));
  }
  return out;
}

}  // namespace oodenv
