// SPDX-License-Identifier: Apache-2.0
#include "auscult/rnn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "auscult/error.hpp"

namespace auscult::rnn {

namespace {

Matrix sigmoid(const Matrix& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

Matrix tanh_of(const Matrix& a) { return a.array().tanh().matrix(); }

Matrix masked(const Matrix& m, const Matrix* mask) {
  return mask ? Matrix(m.cwiseProduct(*mask)) : m;
}

// Everything a backward pass needs from one time step of one direction.
struct StepCache {
  Matrix x;        // input after dropout
  Matrix h_tilde;  // previous state after recurrent dropout
  Matrix h_prev;
  Matrix c_prev;   // LSTM only
  Matrix g1, g2, g3, g4;  // LSTM: i f g o; GRU: z r n (g4 unused)
  Matrix tanh_c;   // LSTM only
  Matrix rh;       // GRU only: r * h_tilde
};

struct DirectionTrace {
  std::vector<StepCache> steps;  // indexed by time, not processing order
  std::vector<std::vector<char>> active;
};

struct LayerTrace {
  std::vector<DirectionTrace> dirs;
  std::vector<Matrix> outputs;  // per t: dirs*H x B
};

struct ForwardTrace {
  std::vector<Matrix> xhat;  // normalized inputs before gamma/beta
  std::vector<Matrix> inputs;
  BatchNormStats bn;
  DropoutMasks masks;
  bool has_masks = false;
  std::vector<LayerTrace> layers;
  Matrix summary;  // S x B
  Matrix probs;    // C x B
};

// Gate activations for one step. Fills the cache fields and returns the
// candidate (h, c) for every column, ignoring the activity mask.
LstmState lstm_step(StepCache& sc, const Matrix& W, const Matrix& U, const Matrix& b) {
  const Eigen::Index H = U.cols();
  Matrix a = W * sc.x;
  a.noalias() += U * sc.h_tilde;
  a.colwise() += b.col(0);
  sc.g1 = sigmoid(a.topRows(H));
  sc.g2 = sigmoid(a.middleRows(H, H));
  sc.g3 = tanh_of(a.middleRows(2 * H, H));
  sc.g4 = sigmoid(a.bottomRows(H));
  LstmState next;
  next.c = sc.g2.cwiseProduct(sc.c_prev) + sc.g1.cwiseProduct(sc.g3);
  sc.tanh_c = tanh_of(next.c);
  next.h = sc.g4.cwiseProduct(sc.tanh_c);
  return next;
}

Matrix gru_step(StepCache& sc, const Matrix& W, const Matrix& U, const Matrix& b) {
  const Eigen::Index H = U.cols();
  Matrix a = W.topRows(2 * H) * sc.x;
  a.noalias() += U.topRows(2 * H) * sc.h_tilde;
  a.colwise() += b.col(0).head(2 * H);
  sc.g1 = sigmoid(a.topRows(H));
  sc.g2 = sigmoid(a.bottomRows(H));
  sc.rh = sc.g2.cwiseProduct(sc.h_tilde);
  Matrix an = W.bottomRows(H) * sc.x;
  an.noalias() += U.bottomRows(H) * sc.rh;
  an.colwise() += b.col(0).tail(H);
  sc.g3 = tanh_of(an);
  return (1.0 - sc.g1.array()).matrix().cwiseProduct(sc.g3) + sc.g1.cwiseProduct(sc.h_prev);
}

void check_batch(const ModelConfig& cfg, const Batch& batch) {
  const std::size_t B = batch.size();
  if (B == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  if (batch.steps.empty()) throw Error(ErrorCode::ShapeMismatch, "batch has no time steps");
  for (const auto& s : batch.steps)
    if (static_cast<std::size_t>(s.rows()) != cfg.n_features ||
        static_cast<std::size_t>(s.cols()) != B)
      throw Error(ErrorCode::ShapeMismatch,
                  "step is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                      ", expected " + std::to_string(cfg.n_features) + "x" + std::to_string(B));
  for (auto len : batch.lengths)
    if (len == 0 || len > batch.max_length())
      throw Error(ErrorCode::ShapeMismatch, "sequence length out of range");
}

void run_direction(const RnnModel& model, std::size_t layer, std::size_t dir,
                   const std::vector<Matrix>& inputs, const Batch& batch,
                   const Matrix* x_mask, const Matrix* h_mask, DirectionTrace& tr,
                   std::vector<Matrix>& outputs) {
  const auto& cfg = model.config;
  const Matrix& W = model.params[model.W(layer, dir)];
  const Matrix& U = model.params[model.U(layer, dir)];
  const Matrix& b = model.params[model.b(layer, dir)];
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  const auto B = static_cast<Eigen::Index>(batch.size());
  const std::size_t T = batch.max_length();

  tr.steps.assign(T, {});
  tr.active.assign(T, std::vector<char>(batch.size(), 0));
  Matrix h = Matrix::Zero(H, B);
  Matrix c = Matrix::Zero(H, B);

  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = dir == 0 ? k : T - 1 - k;
    StepCache& sc = tr.steps[t];
    auto& active = tr.active[t];
    for (Eigen::Index col = 0; col < B; ++col) active[col] = batch.active(t, col);

    sc.x = masked(inputs[t], x_mask);
    sc.h_prev = h;
    sc.h_tilde = masked(h, h_mask);
    auto out = outputs[t].middleRows(static_cast<Eigen::Index>(dir) * H, H);

    if (cfg.cell == CellType::LSTM) {
      sc.c_prev = c;
      LstmState next = lstm_step(sc, W, U, b);
      for (Eigen::Index col = 0; col < B; ++col) {
        if (!active[col]) continue;
        h.col(col) = next.h.col(col);
        c.col(col) = next.c.col(col);
        out.col(col) = next.h.col(col);
      }
    } else {
      Matrix next = gru_step(sc, W, U, b);
      for (Eigen::Index col = 0; col < B; ++col) {
        if (!active[col]) continue;
        h.col(col) = next.col(col);
        out.col(col) = next.col(col);
      }
    }
  }
}

// Walks one direction backwards. dh enters as the gradient on the final
// state; d_inputs (if non-null) accumulates gradients on the layer inputs.
void backprop_direction(const RnnModel& model, std::size_t layer, std::size_t dir,
                        const DirectionTrace& tr, const std::vector<Matrix>* d_outputs,
                        Matrix dh, const Matrix* x_mask, const Matrix* h_mask,
                        std::vector<Matrix>& grads, std::vector<Matrix>* d_inputs) {
  const auto& cfg = model.config;
  const Matrix& W = model.params[model.W(layer, dir)];
  const Matrix& U = model.params[model.U(layer, dir)];
  Matrix& gW = grads[model.W(layer, dir)];
  Matrix& gU = grads[model.U(layer, dir)];
  Matrix& gb = grads[model.b(layer, dir)];
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  const Eigen::Index B = dh.cols();
  const std::size_t T = tr.steps.size();
  const bool lstm = cfg.cell == CellType::LSTM;

  Matrix dc = Matrix::Zero(H, B);
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = dir == 0 ? T - 1 - k : k;
    const StepCache& sc = tr.steps[t];
    const auto& active = tr.active[t];

    Matrix dh_cell = dh;
    if (d_outputs)
      dh_cell += (*d_outputs)[t].middleRows(static_cast<Eigen::Index>(dir) * H, H);
    Matrix carry_h = Matrix::Zero(H, B);
    Matrix carry_c = Matrix::Zero(H, B);
    Matrix dc_in = dc;
    for (Eigen::Index col = 0; col < B; ++col) {
      if (active[col]) continue;
      carry_h.col(col) = dh.col(col);
      dh_cell.col(col).setZero();
      if (lstm) {
        carry_c.col(col) = dc.col(col);
        dc_in.col(col).setZero();
      }
    }

    Matrix da(W.rows(), B);
    Matrix dh_tilde;
    if (lstm) {
      const auto i = sc.g1.array(), f = sc.g2.array(), g = sc.g3.array(), o = sc.g4.array();
      const auto tc = sc.tanh_c.array();
      Matrix dc_cell = dc_in + (dh_cell.array() * o * (1.0 - tc.square())).matrix();
      const auto dcc = dc_cell.array();
      da.topRows(H) = (dcc * g * i * (1.0 - i)).matrix();
      da.middleRows(H, H) = (dcc * sc.c_prev.array() * f * (1.0 - f)).matrix();
      da.middleRows(2 * H, H) = (dcc * i * (1.0 - g.square())).matrix();
      da.bottomRows(H) = (dh_cell.array() * tc * o * (1.0 - o)).matrix();
      gW.noalias() += da * sc.x.transpose();
      gU.noalias() += da * sc.h_tilde.transpose();
      dh_tilde = U.transpose() * da;
      dc = (dcc * f).matrix() + carry_c;
    } else {
      const auto z = sc.g1.array(), r = sc.g2.array(), n = sc.g3.array();
      const auto dhc = dh_cell.array();
      Matrix dh_direct = (dhc * z).matrix();
      da.bottomRows(H) = (dhc * (1.0 - z) * (1.0 - n.square())).matrix();
      da.topRows(H) = (dhc * (sc.h_prev.array() - n) * z * (1.0 - z)).matrix();
      Matrix d_rh = U.bottomRows(H).transpose() * da.bottomRows(H);
      da.middleRows(H, H) = (d_rh.array() * sc.h_tilde.array() * r * (1.0 - r)).matrix();
      gW.noalias() += da * sc.x.transpose();
      gU.topRows(2 * H).noalias() += da.topRows(2 * H) * sc.h_tilde.transpose();
      gU.bottomRows(H).noalias() += da.bottomRows(H) * sc.rh.transpose();
      dh_tilde = U.topRows(2 * H).transpose() * da.topRows(2 * H);
      dh_tilde += (d_rh.array() * r).matrix();
      // z * h_prev bypasses the recurrent dropout mask
      carry_h += dh_direct;
    }
    gb.col(0) += da.rowwise().sum();

    if (d_inputs) {
      Matrix dx = W.transpose() * da;
      if (x_mask) dx = dx.cwiseProduct(*x_mask);
      (*d_inputs)[t] += dx;
    }
    if (h_mask) dh_tilde = dh_tilde.cwiseProduct(*h_mask);
    dh = dh_tilde + carry_h;
  }
}

ForwardTrace run_forward(const RnnModel& model, const Batch& batch,
                         const ForwardOptions& opts) {
  const auto& cfg = model.config;
  check_batch(cfg, batch);
  const std::size_t T = batch.max_length();
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  const std::size_t dirs = cfg.directions();

  ForwardTrace tr;
  tr.inputs = batch_norm_inputs(model, batch, opts, &tr.bn);
  // xhat = (y - beta) / gamma is not stable for gamma ~ 0, so recompute it.
  {
    const bool batch_stats = opts.mode == Mode::Train && !opts.freeze_batch_norm;
    const Vector& mean = batch_stats ? tr.bn.mean : model.running_mean;
    const Vector& var = batch_stats ? tr.bn.var : model.running_var;
    const Vector inv_std = (var.array() + kBatchNormEpsilon).rsqrt().matrix();
    tr.xhat.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      tr.xhat[t] = Matrix::Zero(batch.steps[t].rows(), B);
      for (Eigen::Index col = 0; col < B; ++col)
        if (batch.active(t, col))
          tr.xhat[t].col(col) =
              ((batch.steps[t].col(col) - mean).array() * inv_std.array()).matrix();
    }
  }

  if (opts.mode == Mode::Train) {
    if (opts.masks) {
      tr.masks = *opts.masks;
      tr.has_masks = true;
    } else if (cfg.dropout > 0.0 || cfg.recurrent_dropout > 0.0) {
      if (!opts.rng)
        throw Error(ErrorCode::InvalidConfig, "Train mode with dropout needs an rng");
      tr.masks = sample_dropout_masks(cfg, batch.size(), *opts.rng);
      tr.has_masks = true;
    }
  }

  const std::vector<Matrix>* layer_in = &tr.inputs;
  tr.layers.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    LayerTrace& lt = tr.layers[l];
    lt.outputs.assign(T, Matrix::Zero(static_cast<Eigen::Index>(dirs) * H, B));
    lt.dirs.resize(dirs);
    for (std::size_t d = 0; d < dirs; ++d) {
      const Matrix* xm = tr.has_masks ? &tr.masks.input[l * dirs + d] : nullptr;
      const Matrix* hm = tr.has_masks ? &tr.masks.recurrent[l * dirs + d] : nullptr;
      run_direction(model, l, d, *layer_in, batch, xm, hm, lt.dirs[d], lt.outputs);
    }
    layer_in = &lt.outputs;
  }

  // Summary: forward state at the last real step, backward state at t = 0.
  const LayerTrace& top = tr.layers.back();
  tr.summary = Matrix::Zero(static_cast<Eigen::Index>(dirs) * H, B);
  for (Eigen::Index col = 0; col < B; ++col) {
    const std::size_t last = batch.lengths[col] - 1;
    tr.summary.col(col).head(H) = top.outputs[last].col(col).head(H);
    if (dirs == 2) tr.summary.col(col).tail(H) = top.outputs[0].col(col).tail(H);
  }

  Matrix logits = model.params[model.dense_W()] * tr.summary;
  logits.colwise() += model.params[model.dense_b()].col(0);
  tr.probs.resize(logits.rows(), B);
  for (Eigen::Index col = 0; col < B; ++col) {
    const double m = logits.col(col).maxCoeff();
    Vector e = (logits.col(col).array() - m).exp().matrix();
    tr.probs.col(col) = e / e.sum();
  }
  return tr;
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 1) throw Error(ErrorCode::InvalidConfig, "layers must be >= 1");
  if (hidden < 1) throw Error(ErrorCode::InvalidConfig, "hidden must be >= 1");
  if (n_classes < 2) throw Error(ErrorCode::InvalidConfig, "n_classes must be >= 2");
  if (n_features < 1) throw Error(ErrorCode::InvalidConfig, "n_features must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0) ||
      !(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0))
    throw Error(ErrorCode::InvalidConfig, "dropout must lie in [0, 1)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
}

void parse_architecture(std::string_view name, ModelConfig& cfg) {
  std::string key(name);
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "lstm") { cfg.cell = CellType::LSTM; cfg.bidirectional = false; }
  else if (key == "gru") { cfg.cell = CellType::GRU; cfg.bidirectional = false; }
  else if (key == "bilstm") { cfg.cell = CellType::LSTM; cfg.bidirectional = true; }
  else if (key == "bigru") { cfg.cell = CellType::GRU; cfg.bidirectional = true; }
  else throw Error(ErrorCode::InvalidConfig, "unknown model '" + std::string(name) + "'");
}

std::string architecture_name(const ModelConfig& cfg) {
  std::string base = cfg.cell == CellType::LSTM ? "LSTM" : "GRU";
  return cfg.bidirectional ? "Bi" + base : base;
}

RnnModel::RnnModel(const ModelConfig& cfg) : config(cfg) {
  cfg.validate();
  const auto F = static_cast<Eigen::Index>(cfg.n_features);
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  const auto G = static_cast<Eigen::Index>(cfg.gates());
  params.push_back(Matrix::Ones(F, 1));
  names.emplace_back("bn_gamma");
  params.push_back(Matrix::Zero(F, 1));
  names.emplace_back("bn_beta");
  const char* dir_names[] = {"fwd", "bwd"};
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const auto in = static_cast<Eigen::Index>(cfg.layer_input(l));
    for (std::size_t d = 0; d < cfg.directions(); ++d) {
      const std::string prefix = "l" + std::to_string(l) + "_" + dir_names[d] + "_";
      params.push_back(Matrix::Zero(G * H, in));
      names.push_back(prefix + "W");
      params.push_back(Matrix::Zero(G * H, H));
      names.push_back(prefix + "U");
      params.push_back(Matrix::Zero(G * H, 1));
      names.push_back(prefix + "b");
    }
  }
  const auto C = static_cast<Eigen::Index>(cfg.n_classes);
  params.push_back(Matrix::Zero(C, static_cast<Eigen::Index>(cfg.summary_size())));
  names.emplace_back("dense_W");
  params.push_back(Matrix::Zero(C, 1));
  names.emplace_back("dense_b");
  running_mean = Vector::Zero(F);
  running_var = Vector::Ones(F);
}

std::size_t RnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.size());
  return n;
}

bool RnnModel::operator==(const RnnModel& other) const {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
  };
  if (!(config == other.config) || names != other.names || params.size() != other.params.size())
    return false;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!same(params[i], other.params[i])) return false;
  return same(running_mean, other.running_mean) && same(running_var, other.running_var);
}

RnnModel initialize_model(const ModelConfig& cfg, std::uint64_t seed) {
  RnnModel model(cfg);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto glorot = [&](Matrix& m) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = limit * unit(rng);
  };
  auto orthogonal = [&](Eigen::Index n) {
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) a(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < n; ++k)
      if (r(k, k) < 0.0) q.col(k) = -q.col(k);
    return q;
  };

  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  for (std::size_t l = 0; l < cfg.layers; ++l)
    for (std::size_t d = 0; d < cfg.directions(); ++d) {
      glorot(model.params[model.W(l, d)]);
      Matrix& U = model.params[model.U(l, d)];
      for (std::size_t g = 0; g < cfg.gates(); ++g)
        U.middleRows(static_cast<Eigen::Index>(g) * H, H) = orthogonal(H);
      if (cfg.cell == CellType::LSTM) model.params[model.b(l, d)].middleRows(H, H).setOnes();
    }
  glorot(model.params[model.dense_W()]);
  return model;
}

Batch make_batch(std::span<const FrameSequence> data, std::span<const std::size_t> indices,
                 std::size_t pad_to) {
  if (indices.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch selection");
  std::size_t T = pad_to;
  const std::size_t F = data[indices.front()].n_features();
  for (auto i : indices) {
    const auto& seq = data[i];
    if (seq.frames.empty()) throw Error(ErrorCode::ShapeMismatch, "empty sequence " + seq.id);
    if (seq.n_features() != F)
      throw Error(ErrorCode::InconsistentFeatureDim, "sequence " + seq.id);
    T = std::max(T, seq.length());
  }
  const auto B = static_cast<Eigen::Index>(indices.size());
  Batch batch;
  batch.steps.assign(T, Matrix::Zero(static_cast<Eigen::Index>(F), B));
  for (Eigen::Index col = 0; col < B; ++col) {
    const auto& seq = data[indices[static_cast<std::size_t>(col)]];
    for (std::size_t t = 0; t < seq.length(); ++t) {
      if (seq.frames[t].size() != F)
        throw Error(ErrorCode::InconsistentFeatureDim, "ragged frames in " + seq.id);
      batch.steps[t].col(col) = Eigen::Map<const Vector>(seq.frames[t].data(),
                                                         static_cast<Eigen::Index>(F));
    }
    batch.lengths.push_back(seq.length());
    batch.labels.push_back(seq.label);
  }
  return batch;
}

Batch make_batch(std::span<const FrameSequence> data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(data, idx);
}

DropoutMasks sample_dropout_masks(const ModelConfig& cfg, std::size_t batch_size, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto B = static_cast<Eigen::Index>(batch_size);
  auto draw = [&](Eigen::Index rows, double p) {
    Matrix m = Matrix::Ones(rows, B);
    if (p <= 0.0) return m;
    const double keep = 1.0 / (1.0 - p);
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = unit(rng) < p ? 0.0 : keep;
    return m;
  };
  DropoutMasks masks;
  for (std::size_t l = 0; l < cfg.layers; ++l)
    for (std::size_t d = 0; d < cfg.directions(); ++d) {
      masks.input.push_back(draw(static_cast<Eigen::Index>(cfg.layer_input(l)), cfg.dropout));
      masks.recurrent.push_back(
          draw(static_cast<Eigen::Index>(cfg.hidden), cfg.recurrent_dropout));
    }
  return masks;
}

std::vector<Matrix> batch_norm_inputs(const RnnModel& model, const Batch& batch,
                                      const ForwardOptions& opts, BatchNormStats* stats) {
  check_batch(model.config, batch);
  const std::size_t T = batch.max_length();
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto F = static_cast<Eigen::Index>(model.config.n_features);
  const bool batch_stats = opts.mode == Mode::Train && !opts.freeze_batch_norm;

  Vector mean = model.running_mean;
  Vector var = model.running_var;
  if (batch_stats) {
    std::size_t count = 0;
    mean = Vector::Zero(F);
    for (std::size_t t = 0; t < T; ++t)
      for (Eigen::Index col = 0; col < B; ++col)
        if (batch.active(t, col)) {
          mean += batch.steps[t].col(col);
          ++count;
        }
    if (count < 2)
      throw Error(ErrorCode::DegenerateBatch,
                  "batch normalization needs >= 2 unmasked positions, got " +
                      std::to_string(count));
    mean /= static_cast<double>(count);
    var = Vector::Zero(F);
    for (std::size_t t = 0; t < T; ++t)
      for (Eigen::Index col = 0; col < B; ++col)
        if (batch.active(t, col))
          var += (batch.steps[t].col(col) - mean).array().square().matrix();
    var /= static_cast<double>(count);
    if (stats) {
      stats->mean = mean;
      stats->var = var;
      stats->valid = true;
    }
  }

  const Vector inv_std = (var.array() + kBatchNormEpsilon).rsqrt().matrix();
  const Vector& gamma = model.params[RnnModel::kGamma].col(0);
  const Vector& beta = model.params[RnnModel::kBeta].col(0);
  std::vector<Matrix> out(T, Matrix::Zero(F, B));
  for (std::size_t t = 0; t < T; ++t)
    for (Eigen::Index col = 0; col < B; ++col)
      if (batch.active(t, col))
        out[t].col(col) = ((batch.steps[t].col(col) - mean).array() * inv_std.array() *
                               gamma.array() +
                           beta.array())
                              .matrix();
  return out;
}

Matrix forward(const RnnModel& model, const Batch& batch, const ForwardOptions& opts) {
  return run_forward(model, batch, opts).probs.transpose();
}

LossResult loss_and_grads(const RnnModel& model, const Batch& batch,
                          const ForwardOptions& opts) {
  const auto& cfg = model.config;
  if (batch.labels.size() != batch.size())
    throw Error(ErrorCode::ShapeMismatch, "labels and lengths differ in count");
  for (int y : batch.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= cfg.n_classes)
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));

  ForwardTrace tr = run_forward(model, batch, opts);
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  const std::size_t dirs = cfg.directions();
  const std::size_t T = batch.max_length();

  LossResult res;
  res.bn = tr.bn;
  res.probs = tr.probs.transpose();
  res.grads.reserve(model.params.size());
  for (const auto& p : model.params) res.grads.push_back(Matrix::Zero(p.rows(), p.cols()));

  // Cross-entropy via log-softmax recomputed from the logits.
  Matrix logits = model.params[model.dense_W()] * tr.summary;
  logits.colwise() += model.params[model.dense_b()].col(0);
  double total = 0.0;
  Matrix d_logits = tr.probs;
  for (Eigen::Index col = 0; col < B; ++col) {
    const int y = batch.labels[static_cast<std::size_t>(col)];
    const double m = logits.col(col).maxCoeff();
    const double lse = m + std::log((logits.col(col).array() - m).exp().sum());
    total += lse - logits(y, col);
    d_logits(y, col) -= 1.0;
  }
  res.loss = total / static_cast<double>(B);
  d_logits /= static_cast<double>(B);

  res.grads[model.dense_W()].noalias() = d_logits * tr.summary.transpose();
  res.grads[model.dense_b()].col(0) = d_logits.rowwise().sum();
  const Matrix d_summary = model.params[model.dense_W()].transpose() * d_logits;

  std::vector<Matrix> d_out;  // gradient on the outputs of the current layer
  for (std::size_t l = cfg.layers; l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(cfg.layer_input(l));
    std::vector<Matrix> d_in(T, Matrix::Zero(in, B));
    const bool top = l + 1 == cfg.layers;
    for (std::size_t d = 0; d < dirs; ++d) {
      Matrix dh = top ? Matrix(d_summary.middleRows(static_cast<Eigen::Index>(d) * H, H))
                      : Matrix::Zero(H, B);
      const Matrix* xm = tr.has_masks ? &tr.masks.input[l * dirs + d] : nullptr;
      const Matrix* hm = tr.has_masks ? &tr.masks.recurrent[l * dirs + d] : nullptr;
      backprop_direction(model, l, d, tr.layers[l].dirs[d], top ? nullptr : &d_out,
                         std::move(dh), xm, hm, res.grads, &d_in);
    }
    d_out = std::move(d_in);
  }

  Matrix& g_gamma = res.grads[RnnModel::kGamma];
  Matrix& g_beta = res.grads[RnnModel::kBeta];
  for (std::size_t t = 0; t < T; ++t) {
    g_gamma.col(0) += d_out[t].cwiseProduct(tr.xhat[t]).rowwise().sum();
    g_beta.col(0) += d_out[t].rowwise().sum();
  }
  return res;
}

LstmState lstm_cell(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                    const Matrix& W, const Matrix& U, const Matrix& b, const Matrix* x_mask,
                    const Matrix* h_mask) {
  if (W.rows() != 4 * U.cols() || U.rows() != W.rows() || b.rows() != W.rows() ||
      x.rows() != W.cols() || h_prev.rows() != U.cols() || c_prev.rows() != U.cols() ||
      h_prev.cols() != x.cols() || c_prev.cols() != x.cols())
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell operand shapes");
  StepCache sc;
  sc.x = masked(x, x_mask);
  sc.h_prev = h_prev;
  sc.h_tilde = masked(h_prev, h_mask);
  sc.c_prev = c_prev;
  return lstm_step(sc, W, U, b);
}

Matrix gru_cell(const Matrix& x, const Matrix& h_prev, const Matrix& W, const Matrix& U,
                const Matrix& b, const Matrix* x_mask, const Matrix* h_mask) {
  if (W.rows() != 3 * U.cols() || U.rows() != W.rows() || b.rows() != W.rows() ||
      x.rows() != W.cols() || h_prev.rows() != U.cols() || h_prev.cols() != x.cols())
    throw Error(ErrorCode::ShapeMismatch, "gru_cell operand shapes");
  StepCache sc;
  sc.x = masked(x, x_mask);
  sc.h_prev = h_prev;
  sc.h_tilde = masked(h_prev, h_mask);
  return gru_step(sc, W, U, b);
}

AdamState::AdamState(const RnnModel& model) {
  for (const auto& p : model.params) {
    m.push_back(Matrix::Zero(p.rows(), p.cols()));
    v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void adam_step(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               const TrainConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "adam state, params and grads differ in count");
  state.t += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto g = grads[k].array();
    state.m[k] = (b1 * state.m[k].array() + (1.0 - b1) * g).matrix();
    state.v[k] = (b2 * state.v[k].array() + (1.0 - b2) * g.square()).matrix();
    const auto m_hat = state.m[k].array() / corr1;
    const auto v_hat = state.v[k].array() / corr2;
    params[k].array() -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
  }
}

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm)
    for (auto& g : grads) g *= max_norm / norm;
  return norm;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

TrainResult train(RnnModel model, std::span<const FrameSequence> data, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  model.config.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no training sequences");
  for (const auto& seq : data) {
    if (seq.frames.empty()) throw Error(ErrorCode::EmptyDataset, "empty sequence " + seq.id);
    for (const auto& f : seq.frames)
      if (f.size() != model.config.n_features)
        throw Error(ErrorCode::InconsistentFeatureDim,
                    "sequence " + seq.id + " has " + std::to_string(f.size()) +
                        " features, model expects " + std::to_string(model.config.n_features));
    if (seq.label < 0 || static_cast<std::size_t>(seq.label) >= model.config.n_classes)
      throw Error(ErrorCode::LabelOutOfRange, "sequence " + seq.id);
  }

  Rng rng(cfg.seed);
  AdamState adam(model);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0, correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::size_t positions = 0;
      for (auto i : idx) positions += data[i].length();
      if (positions < 2) continue;  // a lone one-frame sequence has no batch statistics

      const Batch batch = make_batch(data, idx);
      ForwardOptions opts;
      opts.mode = Mode::Train;
      opts.rng = &rng;
      LossResult res = loss_and_grads(model, batch, opts);
      if (!std::isfinite(res.loss))
        throw Error(ErrorCode::NumericFailure, "non-finite loss at epoch " + std::to_string(epoch));
      const double norm = clip_global_norm(res.grads, cfg.clip_norm);
      if (!std::isfinite(norm))
        throw Error(ErrorCode::NumericFailure,
                    "non-finite gradient at epoch " + std::to_string(epoch));
      adam_step(adam, model.params, res.grads, cfg);

      model.running_mean = kBatchNormMomentum * model.running_mean +
                           (1.0 - kBatchNormMomentum) * res.bn.mean;
      model.running_var = kBatchNormMomentum * model.running_var +
                          (1.0 - kBatchNormMomentum) * res.bn.var;

      loss_sum += res.loss * static_cast<double>(batch.size());
      for (std::size_t col = 0; col < batch.size(); ++col) {
        const Vector row = res.probs.row(static_cast<Eigen::Index>(col)).transpose();
        if (static_cast<int>(argmax({row.data(), static_cast<std::size_t>(row.size())})) ==
            batch.labels[col])
          ++correct;
      }
      seen += batch.size();
    }
    EpochStats st;
    st.epoch = epoch;
    st.loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    st.accuracy = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
    result.history.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  result.model = std::move(model);
  return result;
}

std::vector<Prediction> predict_all(const RnnModel& model, std::span<const FrameSequence> data,
                                    std::size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  std::vector<Prediction> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Matrix probs = forward(model, make_batch(data, idx), {});
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      Prediction p;
      p.probs.resize(static_cast<std::size_t>(probs.cols()));
      for (Eigen::Index c = 0; c < probs.cols(); ++c) p.probs[c] = probs(r, c);
      p.label = static_cast<int>(argmax(p.probs));
      out.push_back(std::move(p));
    }
  }
  return out;
}

Prediction predict(const RnnModel& model, const FrameSequence& seq) {
  return predict_all(model, std::span<const FrameSequence>(&seq, 1), 1).front();
}

}  // namespace auscult::rnn
