#include "doctest.h"

#include "oodenv/datagen.hpp"
#include "oodenv/model.hpp"
#include "oodenv/preprocess.hpp"
#include "oodenv/train.hpp"

#include <numeric>

using namespace oodenv;

namespace {

std::vector<ModelInput> small_inputs(int n_stays, int steps, std::uint64_t seed) {
  GenConfig g;
  g.n_hospitals = 1;
  g.min_stays = n_stays;
  g.max_stays = n_stays;
  g.steps = steps;
  g.seed = seed;
  auto [ds, manifest] = generate(g);
  std::vector<std::size_t> idx(ds.stays.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto prep = fit_preprocessor(ds, idx);
  return encode(ds, idx, prep);
}

ModelConfig tiny_config(Architecture arch, int layers, bool bidir) {
  ModelConfig c = ModelConfig::small();
  c.architecture = arch;
  c.gru_layers = layers;
  c.bidirectional = bidir;
  c.hidden_dim = 4;
  c.embed_dim = 3;
  return c;
}

// Central finite differences on every parameter, double precision.
void check_gradients(const ModelConfig& cfg) {
  const auto inputs = small_inputs(5, 4, 11);
  std::vector<const ModelInput*> ptrs;
  for (const auto& x : inputs) ptrs.push_back(&x);
  const InputLayout layout = InputLayout::from_schema(FeatureSchema::default_schema());
  SequenceClassifier<double> model(cfg, layout);
  auto params = model.init_params(3);
  auto grads = model.zero_params();
  model.loss_and_grads(params, ptrs, grads);

  std::vector<double*> p_ptr, g_ptr;
  params.visit([&](std::string_view, double* p, Eigen::Index k) {
    for (Eigen::Index i = 0; i < k; ++i) p_ptr.push_back(p + i);
  });
  grads.visit([&](std::string_view, double* p, Eigen::Index k) {
    for (Eigen::Index i = 0; i < k; ++i) g_ptr.push_back(p + i);
  });
  REQUIRE(p_ptr.size() == g_ptr.size());
  REQUIRE(static_cast<std::int64_t>(p_ptr.size()) == param_count(cfg, layout));

  auto scratch = model.zero_params();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < p_ptr.size(); ++i) {
    const double orig = *p_ptr[i];
    *p_ptr[i] = orig + h;
    const double up = model.loss_and_grads(params, ptrs, scratch);
    *p_ptr[i] = orig - h;
    const double down = model.loss_and_grads(params, ptrs, scratch);
    *p_ptr[i] = orig;
    const double numeric = (up - down) / (2 * h);
    const double err = std::abs(numeric - *g_ptr[i]) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-6);
}

}  // namespace

TEST_CASE("gradients match finite differences: logistic") {
  check_gradients(tiny_config(Architecture::Logistic, 1, false));
}

TEST_CASE("gradients match finite differences: unidirectional GRU") {
  check_gradients(tiny_config(Architecture::Gru, 1, false));
}

TEST_CASE("gradients match finite differences: bidirectional two-layer GRU") {
  check_gradients(tiny_config(Architecture::Gru, 2, true));
}

TEST_CASE("parameter counts of the presets") {
  const auto schema = FeatureSchema::default_schema();
  const auto layout = InputLayout::from_schema(schema);
  const std::int64_t vocab_rows = 56;
  // Oracle: embeddings + per-direction GRU gates + linear head, computed by hand.
  auto gru = [&](int layers, int h, int e) {
    const int d0 = 10 + 4 * e + 3 + 2 * e;
    std::int64_t n = vocab_rows * e;
    for (int l = 0; l < layers; ++l) {
      const int d = l == 0 ? d0 : 2 * h;
      n += 2 * 3 * (static_cast<std::int64_t>(h) * d + h * h + 2 * h);
    }
    return n + 2 * 2 * h + 2;
  };
  CHECK(param_count(ModelConfig::small(), layout) == gru(1, 32, 16));
  auto large = ModelConfig::large();
  CHECK(param_count(large, layout) == gru(large.gru_layers, large.hidden_dim, large.embed_dim));
}

TEST_CASE("forward probabilities sum to one") {
  const auto inputs = small_inputs(6, 5, 2);
  std::vector<const ModelInput*> ptrs;
  for (const auto& x : inputs) ptrs.push_back(&x);
  SequenceClassifier<float> model(ModelConfig::small(),
                                  InputLayout::from_schema(FeatureSchema::default_schema()));
  const auto probs = model.forward(model.init_params(1), ptrs);
  REQUIRE(probs.rows() == 6);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    CHECK(probs(i, 0) + probs(i, 1) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(probs(i, 1) >= 0.0f);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto inputs = small_inputs(40, 6, 5);
  std::span<const ModelInput> all(inputs);
  auto cfg = ModelConfig::small();
  cfg.max_epochs = 3;
  cfg.seed = 9;
  const auto layout = InputLayout::from_schema(FeatureSchema::default_schema());
  auto a = train<float>(cfg, layout, all.subspan(0, 30), all.subspan(30));
  auto b = train<float>(cfg, layout, all.subspan(0, 30), all.subspan(30));
  REQUIRE(a.log.epochs.size() == b.log.epochs.size());
  for (std::size_t i = 0; i < a.log.epochs.size(); ++i)
    CHECK(a.log.epochs[i].train_loss == b.log.epochs[i].train_loss);
  CHECK(a.state.params.head_w == b.state.params.head_w);
}

TEST_CASE("early stopping uses strict improvement with tolerance") {
  EarlyStopping es(2, 1e-6);
  CHECK(es.update(0.5));
  CHECK_FALSE(es.update(0.5 + 5e-7));
  CHECK_FALSE(es.should_stop());
  CHECK_FALSE(es.update(0.4));
  CHECK(es.should_stop());
  CHECK(es.best_epoch() == 1);
}
