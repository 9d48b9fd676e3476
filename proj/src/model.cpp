#include "oodenv/model.hpp"

#include "oodenv/errors.hpp"
#include "oodenv/rng.hpp"

#include <algorithm>
#include <cmath>

namespace oodenv {

std::string_view to_string(Architecture a) { return a == Architecture::Gru ? "gru" : "logistic"; }
std::string_view to_string(Preset p) { return p == Preset::Large ? "large" : "small"; }

Architecture parse_architecture(std::string_view s) {
  if (s == "gru") return Architecture::Gru;
  if (s == "logistic") return Architecture::Logistic;
  throw ConfigError("unknown architecture '" + std::string(s) + "' (expected gru|logistic)");
}

Preset parse_preset(std::string_view s) {
  if (s == "large" || s == "LARGE") return Preset::Large;
  if (s == "small" || s == "SMALL") return Preset::Small;
  throw ConfigError("unknown preset '" + std::string(s) + "' (expected large|small)");
}

ModelConfig ModelConfig::large() {
  ModelConfig c;
  c.gru_layers = 3;
  c.hidden_dim = 128;
  c.embed_dim = 16;
  c.learning_rate = 1e-3;
  c.batch_size = 16;
  return c;
}

ModelConfig ModelConfig::small() {
  ModelConfig c;
  c.gru_layers = 1;
  c.hidden_dim = 32;
  c.embed_dim = 16;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  return c;
}

ModelConfig ModelConfig::from_preset(Preset p) { return p == Preset::Large ? large() : small(); }

void ModelConfig::validate() const {
  if (gru_layers < 1) throw ConfigError("model.gru_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("model.hidden_dim must be >= 1");
  if (embed_dim < 1) throw ConfigError("model.embed_dim must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("model.learning_rate must be a finite non-negative number");
  if (batch_size < 1) throw ConfigError("model.batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("model.max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("model.patience must be >= 1");
}

InputLayout InputLayout::from_schema(const FeatureSchema& schema) {
  InputLayout l;
  l.n_ts_cont = static_cast<int>(schema.continuous_ts.size());
  l.n_static_cont = static_cast<int>(schema.continuous_static.size());
  for (const auto& f : schema.categorical_ts) l.ts_cat_vocab.push_back(schema.vocab_size(f));
  for (const auto& f : schema.categorical_static) l.static_cat_vocab.push_back(schema.vocab_size(f));
  return l;
}

int InputLayout::vocab(int var) const {
  const int n_ts = static_cast<int>(ts_cat_vocab.size());
  return var < n_ts ? ts_cat_vocab[var] : static_cat_vocab[var - n_ts];
}

std::int64_t param_count(const ModelConfig& cfg, const FeatureSchema& schema) {
  return param_count(cfg, InputLayout::from_schema(schema));
}

std::int64_t param_count(const ModelConfig& cfg, const InputLayout& layout) {
  const std::int64_t e = cfg.embed_dim;
  std::int64_t total = 0;
  for (int v = 0; v < layout.n_categorical(); ++v) total += layout.vocab(v) * e;
  const std::int64_t d0 = layout.input_dim(cfg.embed_dim);
  if (cfg.architecture == Architecture::Logistic) return total + 2 * d0 + 2;
  const std::int64_t h = cfg.hidden_dim;
  const std::int64_t dirs = cfg.directions();
  for (int l = 0; l < cfg.gru_layers; ++l) {
    const std::int64_t d = l == 0 ? d0 : dirs * h;
    total += dirs * 3 * (h * d + h * h + 2 * h);
  }
  return total + 2 * dirs * h + 2;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Scalar>
using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-x).exp());
}

}  // namespace

template <typename Scalar>
struct SequenceClassifier<Scalar>::Workspace {
  int T = 0, B = 0;
  Mat<Scalar> Xc;                            // n_ts_cont x T*B
  Mat<Scalar> Xs;                            // n_static_cont x B
  std::vector<std::vector<int>> ts_codes;    // per ts categorical, T*B
  std::vector<std::vector<int>> st_codes;    // per static categorical, B

  struct CellCache {
    Mat<Scalar> R, Z, N, HN, H;  // h x T*B
  };
  std::vector<CellCache> cells;  // layer-major
  std::vector<Mat<Scalar>> layer_input;  // stacked outputs feeding layer l (l >= 1)
};

template <typename Scalar>
SequenceClassifier<Scalar>::SequenceClassifier(ModelConfig cfg, InputLayout layout)
    : cfg_(std::move(cfg)), layout_(std::move(layout)) {
  cfg_.validate();
}

template <typename Scalar>
int SequenceClassifier<Scalar>::feature_dim() const {
  if (cfg_.architecture == Architecture::Logistic) return layout_.input_dim(cfg_.embed_dim);
  return cfg_.directions() * cfg_.hidden_dim;
}

template <typename Scalar>
ModelParams<Scalar> SequenceClassifier<Scalar>::zero_params() const {
  ModelParams<Scalar> p;
  const int e = cfg_.embed_dim;
  for (int v = 0; v < layout_.n_categorical(); ++v)
    p.embeddings.push_back(Mat<Scalar>::Zero(layout_.vocab(v), e));
  if (cfg_.architecture == Architecture::Gru) {
    const int h = cfg_.hidden_dim, dirs = cfg_.directions();
    for (int l = 0; l < cfg_.gru_layers; ++l) {
      const int d = l == 0 ? layout_.input_dim(e) : dirs * h;
      for (int k = 0; k < dirs; ++k)
        p.cells.push_back({Mat<Scalar>::Zero(3 * h, d), Mat<Scalar>::Zero(3 * h, h),
                           Vec<Scalar>::Zero(3 * h), Vec<Scalar>::Zero(3 * h)});
    }
  }
  p.head_w = Mat<Scalar>::Zero(2, feature_dim());
  p.head_b = Vec<Scalar>::Zero(2);
  return p;
}

template <typename Scalar>
ModelParams<Scalar> SequenceClassifier<Scalar>::init_params(std::uint64_t seed) const {
  auto p = zero_params();
  Rng rng(seed, {0x696e6974ULL});
  for (auto& emb : p.embeddings)
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = Scalar(rng.normal(0.0, 0.1));
  const double k = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden_dim));
  for (auto& cell : p.cells) {
    for (Eigen::Index i = 0; i < cell.W.size(); ++i) cell.W.data()[i] = Scalar(rng.uniform(-k, k));
    for (Eigen::Index i = 0; i < cell.U.size(); ++i) cell.U.data()[i] = Scalar(rng.uniform(-k, k));
  }
  const double kh = 1.0 / std::sqrt(static_cast<double>(feature_dim()));
  for (Eigen::Index i = 0; i < p.head_w.size(); ++i)
    p.head_w.data()[i] = Scalar(rng.uniform(-kh, kh));
  return p;
}

template <typename Scalar>
Mat<Scalar> SequenceClassifier<Scalar>::forward(const ModelParams<Scalar>& params,
                                                Batch batch) const {
  return run(params, batch, nullptr, nullptr);
}

template <typename Scalar>
Scalar SequenceClassifier<Scalar>::loss_and_grads(const ModelParams<Scalar>& params, Batch batch,
                                                  ModelParams<Scalar>& grads) const {
  if (batch.empty()) throw DataError("loss_and_grads: empty batch");
  if (grads.size() != params.size() || grads.cells.size() != params.cells.size())
    grads = zero_params();
  else
    grads.set_zero();
  Scalar loss = 0;
  run(params, batch, &grads, &loss);
  return loss;
}

template <typename Scalar>
Mat<Scalar> SequenceClassifier<Scalar>::run(const ModelParams<Scalar>& params, Batch batch,
                                            ModelParams<Scalar>* grads, Scalar* loss_out) const {
  const int B = static_cast<int>(batch.size());
  if (B == 0) return Mat<Scalar>(0, 2);
  const int T = static_cast<int>(batch[0]->ts_cont.rows());
  const int n_tc = layout_.n_ts_cont, n_sc = layout_.n_static_cont;
  const int n_tk = static_cast<int>(layout_.ts_cat_vocab.size());
  const int n_sk = static_cast<int>(layout_.static_cat_vocab.size());
  const int E = cfg_.embed_dim;
  const int TB = T * B;

  // ---- assemble batch tensors ------------------------------------------------
  Workspace ws;
  ws.T = T;
  ws.B = B;
  ws.Xc.resize(n_tc, TB);
  ws.Xs.resize(n_sc, B);
  ws.ts_codes.assign(n_tk, std::vector<int>(TB));
  ws.st_codes.assign(n_sk, std::vector<int>(B));
  for (int b = 0; b < B; ++b) {
    const ModelInput& in = *batch[b];
    if (in.ts_cont.rows() != T || in.ts_cont.cols() != n_tc || in.ts_cat.rows() != T ||
        in.ts_cat.cols() != n_tk || in.static_cont.size() != n_sc || in.static_cat.size() != n_sk)
      throw DataError("model input shape does not match the feature schema");
    for (int t = 0; t < T; ++t) {
      ws.Xc.col(t * B + b) = in.ts_cont.row(t).transpose().template cast<Scalar>();
      for (int v = 0; v < n_tk; ++v) {
        const int c = in.ts_cat(t, v);
        if (c < 0 || c >= layout_.ts_cat_vocab[v])
          throw DataError("categorical code out of vocabulary");
        ws.ts_codes[v][t * B + b] = c;
      }
    }
    ws.Xs.col(b) = in.static_cont.template cast<Scalar>();
    for (int u = 0; u < n_sk; ++u) {
      const int c = in.static_cat[u];
      if (c < 0 || c >= layout_.static_cat_vocab[u])
        throw DataError("categorical code out of vocabulary");
      ws.st_codes[u][b] = c;
    }
  }

  // Column offsets of each input block inside the first-layer W.
  const int off_tk = n_tc;
  const int off_sc = off_tk + n_tk * E;
  const int off_sk = off_sc + n_sc;

  Mat<Scalar> feat;  // feature_dim x B
  const bool gru = cfg_.architecture == Architecture::Gru;
  const int h = cfg_.hidden_dim, dirs = cfg_.directions(), L = cfg_.gru_layers;

  if (!gru) {
    const int d0 = layout_.input_dim(E);
    feat = Mat<Scalar>::Zero(d0, B);
    const Scalar inv_T = Scalar(1) / Scalar(T);
    for (int t = 0; t < T; ++t) feat.topRows(n_tc) += ws.Xc.middleCols(t * B, B);
    feat.topRows(n_tc) *= inv_T;
    for (int v = 0; v < n_tk; ++v)
      for (int j = 0; j < TB; ++j)
        feat.block(off_tk + v * E, j % B, E, 1) +=
            inv_T * params.embeddings[v].row(ws.ts_codes[v][j]).transpose();
    feat.middleRows(off_sc, n_sc) = ws.Xs;
    for (int u = 0; u < n_sk; ++u)
      for (int b = 0; b < B; ++b)
        feat.block(off_sk + u * E, b, E, 1) =
            params.embeddings[n_tk + u].row(ws.st_codes[u][b]).transpose();
  } else {
    ws.cells.resize(L * dirs);
    ws.layer_input.resize(L);
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < dirs; ++k) {
        const GruCell<Scalar>& cell = params.cells[l * dirs + k];
        Mat<Scalar> Gx;
        if (l == 0) {
          // Blockwise first-layer projection: embeddings and static inputs are
          // projected once per vocabulary row / per stay rather than per step.
          Gx.noalias() = cell.W.leftCols(n_tc) * ws.Xc;
          for (int v = 0; v < n_tk; ++v) {
            const Mat<Scalar> P = cell.W.middleCols(off_tk + v * E, E) *
                                  params.embeddings[v].transpose();
            const auto& codes = ws.ts_codes[v];
            for (int j = 0; j < TB; ++j) Gx.col(j) += P.col(codes[j]);
          }
          Mat<Scalar> Gs = cell.W.middleCols(off_sc, n_sc) * ws.Xs;
          for (int u = 0; u < n_sk; ++u) {
            const Mat<Scalar> P = cell.W.middleCols(off_sk + u * E, E) *
                                  params.embeddings[n_tk + u].transpose();
            for (int b = 0; b < B; ++b) Gs.col(b) += P.col(ws.st_codes[u][b]);
          }
          Gs.colwise() += cell.bw;
          for (int t = 0; t < T; ++t) Gx.middleCols(t * B, B) += Gs;
        } else {
          Gx.noalias() = cell.W * ws.layer_input[l];
          Gx.colwise() += cell.bw;
        }

        auto& c = ws.cells[l * dirs + k];
        c.R.resize(h, TB);
        c.Z.resize(h, TB);
        c.N.resize(h, TB);
        c.HN.resize(h, TB);
        c.H.resize(h, TB);
        const bool reverse = k == 1;
        Mat<Scalar> Gh(3 * h, B);
        for (int s = 0; s < T; ++s) {
          const int t = reverse ? T - 1 - s : s;
          const int col = t * B;
          const bool has_prev = s > 0;
          const int prev = reverse ? col + B : col - B;
          if (has_prev) {
            Gh.noalias() = cell.U * c.H.middleCols(prev, B);
            Gh.colwise() += cell.bu;
          } else {
            Gh = cell.bu.replicate(1, B);
          }
          auto r = c.R.middleCols(col, B);
          auto z = c.Z.middleCols(col, B);
          auto n = c.N.middleCols(col, B);
          r = sigmoid((Gx.block(0, col, h, B) + Gh.topRows(h)).array()).matrix();
          z = sigmoid((Gx.block(h, col, h, B) + Gh.middleRows(h, h)).array()).matrix();
          c.HN.middleCols(col, B) = Gh.bottomRows(h);
          n = (Gx.block(2 * h, col, h, B).array() + r.array() * Gh.bottomRows(h).array())
                  .tanh()
                  .matrix();
          if (has_prev)
            c.H.middleCols(col, B) =
                (n.array() + z.array() * (c.H.middleCols(prev, B).array() - n.array())).matrix();
          else
            c.H.middleCols(col, B) = ((Scalar(1) - z.array()) * n.array()).matrix();
        }
      }
      if (l + 1 < L) {
        auto& next = ws.layer_input[l + 1];
        next.resize(dirs * h, TB);
        for (int k = 0; k < dirs; ++k) next.middleRows(k * h, h) = ws.cells[l * dirs + k].H;
      }
    }
    feat.resize(dirs * h, B);
    const int top = (L - 1) * dirs;
    feat.topRows(h) = ws.cells[top].H.middleCols((T - 1) * B, B);
    if (dirs == 2) feat.bottomRows(h) = ws.cells[top + 1].H.leftCols(B);
  }

  // ---- head + softmax ----------------------------------------------------------
  Mat<Scalar> logits = params.head_w * feat;
  logits.colwise() += params.head_b;
  Mat<Scalar> probs(2, B);
  Scalar loss = 0;
  for (int b = 0; b < B; ++b) {
    const Scalar m = std::max(logits(0, b), logits(1, b));
    const Scalar e0 = std::exp(logits(0, b) - m), e1 = std::exp(logits(1, b) - m);
    const Scalar lse = m + std::log(e0 + e1);
    probs(0, b) = e0 / (e0 + e1);
    probs(1, b) = e1 / (e0 + e1);
    loss += lse - logits(batch[b]->label == 1 ? 1 : 0, b);
  }
  loss /= Scalar(B);
  if (loss_out) *loss_out = loss;
  if (!grads) return probs.transpose();

  // ---- backward ----------------------------------------------------------------
  ModelParams<Scalar>& g = *grads;
  Mat<Scalar> dlogits = probs;
  for (int b = 0; b < B; ++b) dlogits(batch[b]->label == 1 ? 1 : 0, b) -= Scalar(1);
  dlogits /= Scalar(B);
  g.head_w.noalias() += dlogits * feat.transpose();
  g.head_b += dlogits.rowwise().sum();
  const Mat<Scalar> dfeat = params.head_w.transpose() * dlogits;

  if (!gru) {
    const Scalar inv_T = Scalar(1) / Scalar(T);
    for (int v = 0; v < n_tk; ++v)
      for (int j = 0; j < TB; ++j)
        g.embeddings[v].row(ws.ts_codes[v][j]) +=
            inv_T * dfeat.block(off_tk + v * E, j % B, E, 1).transpose();
    for (int u = 0; u < n_sk; ++u)
      for (int b = 0; b < B; ++b)
        g.embeddings[n_tk + u].row(ws.st_codes[u][b]) +=
            dfeat.block(off_sk + u * E, b, E, 1).transpose();
    return probs.transpose();
  }

  // Gradient w.r.t. each direction's output sequence of the current layer.
  std::vector<Mat<Scalar>> dH(dirs, Mat<Scalar>::Zero(h, TB));
  dH[0].middleCols((T - 1) * B, B) = dfeat.topRows(h);
  if (dirs == 2) dH[1].leftCols(B) = dfeat.bottomRows(h);

  for (int l = L - 1; l >= 0; --l) {
    Mat<Scalar> dX;
    if (l > 0) dX = Mat<Scalar>::Zero(dirs * h, TB);
    for (int k = 0; k < dirs; ++k) {
      const GruCell<Scalar>& cell = params.cells[l * dirs + k];
      GruCell<Scalar>& gc = g.cells[l * dirs + k];
      const auto& c = ws.cells[l * dirs + k];
      const bool reverse = k == 1;
      Mat<Scalar> dGx(3 * h, TB), dGh(3 * h, TB);
      Mat<Scalar> Hprev = Mat<Scalar>::Zero(h, TB);
      if (T > 1) {
        if (reverse)
          Hprev.leftCols((T - 1) * B) = c.H.rightCols((T - 1) * B);
        else
          Hprev.rightCols((T - 1) * B) = c.H.leftCols((T - 1) * B);
      }
      Mat<Scalar> carry = Mat<Scalar>::Zero(h, B);
      for (int s = T - 1; s >= 0; --s) {
        const int t = reverse ? T - 1 - s : s;
        const int col = t * B;
        const auto r = c.R.middleCols(col, B).array();
        const auto z = c.Z.middleCols(col, B).array();
        const auto n = c.N.middleCols(col, B).array();
        const auto hn = c.HN.middleCols(col, B).array();
        const auto hp = Hprev.middleCols(col, B).array();
        const Arr<Scalar> dh = dH[k].middleCols(col, B).array() + carry.array();
        const Arr<Scalar> dan = dh * (Scalar(1) - z) * (Scalar(1) - n.square());
        const Arr<Scalar> daz = dh * (hp - n) * z * (Scalar(1) - z);
        const Arr<Scalar> dar = dan * hn * r * (Scalar(1) - r);
        dGx.block(0, col, h, B) = dar.matrix();
        dGx.block(h, col, h, B) = daz.matrix();
        dGx.block(2 * h, col, h, B) = dan.matrix();
        dGh.block(0, col, h, B) = dar.matrix();
        dGh.block(h, col, h, B) = daz.matrix();
        dGh.block(2 * h, col, h, B) = (dan * r).matrix();
        carry = (dh * z).matrix();
        if (s > 0) carry.noalias() += cell.U.transpose() * dGh.middleCols(col, B);
      }
      gc.U.noalias() += dGh * Hprev.transpose();
      gc.bu += dGh.rowwise().sum();
      gc.bw += dGx.rowwise().sum();

      if (l > 0) {
        gc.W.noalias() += dGx * ws.layer_input[l].transpose();
        dX.noalias() += cell.W.transpose() * dGx;
        continue;
      }
      // First layer: blockwise input gradients.
      gc.W.leftCols(n_tc).noalias() += dGx * ws.Xc.transpose();
      for (int v = 0; v < n_tk; ++v) {
        Mat<Scalar> A = Mat<Scalar>::Zero(3 * h, layout_.ts_cat_vocab[v]);
        const auto& codes = ws.ts_codes[v];
        for (int j = 0; j < TB; ++j) A.col(codes[j]) += dGx.col(j);
        gc.W.middleCols(off_tk + v * E, E).noalias() += A * params.embeddings[v];
        g.embeddings[v].noalias() += A.transpose() * cell.W.middleCols(off_tk + v * E, E);
      }
      Mat<Scalar> dGs = dGx.leftCols(B);
      for (int t = 1; t < T; ++t) dGs += dGx.middleCols(t * B, B);
      gc.W.middleCols(off_sc, n_sc).noalias() += dGs * ws.Xs.transpose();
      for (int u = 0; u < n_sk; ++u) {
        Mat<Scalar> A = Mat<Scalar>::Zero(3 * h, layout_.static_cat_vocab[u]);
        for (int b = 0; b < B; ++b) A.col(ws.st_codes[u][b]) += dGs.col(b);
        gc.W.middleCols(off_sk + u * E, E).noalias() += A * params.embeddings[n_tk + u];
        g.embeddings[n_tk + u].noalias() +=
            A.transpose() * cell.W.middleCols(off_sk + u * E, E);
      }
    }
    if (l > 0)
      for (int k = 0; k < dirs; ++k) dH[k] = dX.middleRows(k * h, h);
  }
  return probs.transpose();
}

template <typename Scalar>
Eigen::VectorXd predict_positive(const SequenceClassifier<Scalar>& model,
                                 const ModelParams<Scalar>& params,
                                 std::span<const ModelInput> inputs, int chunk) {
  Eigen::VectorXd out(inputs.size());
  std::vector<const ModelInput*> ptrs;
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    const std::size_t end = std::min(inputs.size(), start + static_cast<std::size_t>(chunk));
    ptrs.clear();
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&inputs[i]);
    const Mat<Scalar> p = model.forward(params, ptrs);
    for (std::size_t i = start; i < end; ++i)
      out[static_cast<Eigen::Index>(i)] = static_cast<double>(p(i - start, 1));
  }
  return out;
}

template class SequenceClassifier<float>;
template class SequenceClassifier<double>;
template Eigen::VectorXd predict_positive<float>(const SequenceClassifier<float>&,
                                                 const ModelParams<float>&,
                                                 std::span<const ModelInput>, int);
template Eigen::VectorXd predict_positive<double>(const SequenceClassifier<double>&,
                                                  const ModelParams<double>&,
                                                  std::span<const ModelInput>, int);

}  // namespace oodenv
