#pragma once

// Sequence classifier: per-variable embeddings, stacked (bi)directional GRU
// and a 2-unit linear head, with hand-written backpropagation. Templated on
// the scalar type so the same code is trained in float and gradient-checked
// in double.

#include "oodenv/core.hpp"
#include "oodenv/preprocess.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oodenv {

enum class Architecture { Gru, Logistic };
enum class Preset { Large, Small };

std::string_view to_string(Architecture a);
std::string_view to_string(Preset p);
Architecture parse_architecture(std::string_view s);
Preset parse_preset(std::string_view s);

struct ModelConfig {
  Architecture architecture = Architecture::Gru;
  int gru_layers = 1;
  int hidden_dim = 32;
  int embed_dim = 16;
  bool bidirectional = true;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_epochs = 100;
  int patience = 7;
  std::uint64_t seed = 0;

  /// 3 layers x 128 hidden units, batch 16.
  static ModelConfig large();
  /// 1 layer x 32 hidden units, batch 8.
  static ModelConfig small();
  static ModelConfig from_preset(Preset p);

  /// Throws ConfigError naming the offending field.
  void validate() const;

  int directions() const { return bidirectional ? 2 : 1; }

  bool operator==(const ModelConfig&) const = default;
};

/// Column layout of the per-timestep input vector
/// [ts_cont | ts_cat embeddings | static_cont | static_cat embeddings].
struct InputLayout {
  int n_ts_cont = 0;
  int n_static_cont = 0;
  std::vector<int> ts_cat_vocab;
  std::vector<int> static_cat_vocab;

  static InputLayout from_schema(const FeatureSchema& schema);

  int n_categorical() const { return static_cast<int>(ts_cat_vocab.size() + static_cat_vocab.size()); }
  int vocab(int var) const;
  int input_dim(int embed_dim) const {
    return n_ts_cont + n_static_cont + n_categorical() * embed_dim;
  }

  bool operator==(const InputLayout&) const = default;
};

/// Closed-form number of learnable parameters.
std::int64_t param_count(const ModelConfig& cfg, const FeatureSchema& schema);
std::int64_t param_count(const ModelConfig& cfg, const InputLayout& layout);

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One direction of one GRU layer. Gate rows are ordered (reset, update, new).
template <typename Scalar>
struct GruCell {
  Mat<Scalar> W;   // 3h x d, input to gates
  Mat<Scalar> U;   // 3h x h, hidden to gates
  Vec<Scalar> bw;  // 3h, input-side bias
  Vec<Scalar> bu;  // 3h, hidden-side bias
};

template <typename Scalar>
struct ModelParams {
  std::vector<Mat<Scalar>> embeddings;  // ts categoricals then static, vocab x embed
  std::vector<GruCell<Scalar>> cells;   // layer-major: cells[layer * dirs + dir]
  Mat<Scalar> head_w;                   // 2 x feature_dim
  Vec<Scalar> head_b;                   // 2

  /// Calls f(name, data, size) for every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::int64_t size() const {
    std::int64_t n = 0;
    visit([&](std::string_view, const Scalar*, Eigen::Index k) { n += k; });
    return n;
  }

  void set_zero() {
    visit([](std::string_view, Scalar* p, Eigen::Index k) { std::fill(p, p + k, Scalar(0)); });
  }

  template <typename Other>
  ModelParams<Other> cast() const;

  bool all_finite() const {
    bool ok = true;
    visit([&](std::string_view, const Scalar* p, Eigen::Index k) {
      for (Eigen::Index i = 0; i < k; ++i) ok = ok && std::isfinite(p[i]);
    });
    return ok;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    for (std::size_t i = 0; i < self.embeddings.size(); ++i)
      f("embedding." + std::to_string(i), self.embeddings[i].data(), self.embeddings[i].size());
    for (std::size_t c = 0; c < self.cells.size(); ++c) {
      auto& cell = self.cells[c];
      const std::string p = "gru." + std::to_string(c) + ".";
      f(p + "W", cell.W.data(), cell.W.size());
      f(p + "U", cell.U.data(), cell.U.size());
      f(p + "bw", cell.bw.data(), cell.bw.size());
      f(p + "bu", cell.bu.data(), cell.bu.size());
    }
    f(std::string("head.w"), self.head_w.data(), self.head_w.size());
    f(std::string("head.b"), self.head_b.data(), self.head_b.size());
  }
};

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::cast() const {
  ModelParams<Other> out;
  for (const auto& e : embeddings) out.embeddings.push_back(e.template cast<Other>());
  for (const auto& c : cells)
    out.cells.push_back({c.W.template cast<Other>(), c.U.template cast<Other>(),
                         c.bw.template cast<Other>(), c.bu.template cast<Other>()});
  out.head_w = head_w.template cast<Other>();
  out.head_b = head_b.template cast<Other>();
  return out;
}

/// Batch of model inputs, referenced without copying.
using Batch = std::span<const ModelInput* const>;

template <typename Scalar>
class SequenceClassifier {
 public:
  SequenceClassifier(ModelConfig cfg, InputLayout layout);

  const ModelConfig& config() const { return cfg_; }
  const InputLayout& layout() const { return layout_; }

  /// Feature dimension entering the linear head.
  int feature_dim() const;

  /// Seeded initialisation: GRU weights U(-1/sqrt(h), 1/sqrt(h)), embeddings
  /// N(0, 0.1), head weights U(-1/sqrt(F), 1/sqrt(F)), zero biases.
  ModelParams<Scalar> init_params(std::uint64_t seed) const;
  ModelParams<Scalar> zero_params() const;

  /// Class probabilities, n x 2, rows summing to one.
  Mat<Scalar> forward(const ModelParams<Scalar>& params, Batch batch) const;

  /// Mean cross-entropy of the batch; gradients are written into `grads`
  /// (overwritten, not accumulated).
  Scalar loss_and_grads(const ModelParams<Scalar>& params, Batch batch,
                        ModelParams<Scalar>& grads) const;

 private:
  struct Workspace;

  Mat<Scalar> run(const ModelParams<Scalar>& params, Batch batch, ModelParams<Scalar>* grads,
                  Scalar* loss) const;

  ModelConfig cfg_;
  InputLayout layout_;
};

extern template class SequenceClassifier<float>;
extern template class SequenceClassifier<double>;

/// Class-1 probabilities for a whole set, evaluated in chunks.
template <typename Scalar>
Eigen::VectorXd predict_positive(const SequenceClassifier<Scalar>& model,
                                 const ModelParams<Scalar>& params,
                                 std::span<const ModelInput> inputs, int chunk = 256);

extern template Eigen::VectorXd predict_positive<float>(const SequenceClassifier<float>&,
                                                        const ModelParams<float>&,
                                                        std::span<const ModelInput>, int);
extern template Eigen::VectorXd predict_positive<double>(const SequenceClassifier<double>&,
                                                         const ModelParams<double>&,
                                                         std::span<const ModelInput>, int);

}  // namespace oodenv
