// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auscult/frames.hpp"

namespace auscult::rnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

enum class CellType { LSTM, GRU };

struct ModelConfig {
  CellType cell = CellType::LSTM;
  bool bidirectional = false;
  std::size_t layers = 2;
  std::size_t hidden = 256;  // per direction
  double dropout = 0.4;
  double recurrent_dropout = 0.4;
  std::size_t n_classes = 2;
  std::size_t n_features = 13;

  void validate() const;
  std::size_t gates() const { return cell == CellType::LSTM ? 4 : 3; }
  std::size_t directions() const { return bidirectional ? 2 : 1; }
  std::size_t layer_input(std::size_t layer) const {
    return layer == 0 ? n_features : directions() * hidden;
  }
  std::size_t summary_size() const { return directions() * hidden; }
  bool operator==(const ModelConfig&) const = default;
};

/// "LSTM", "GRU", "BiLSTM", "BiGRU" (case-insensitive).
void parse_architecture(std::string_view name, ModelConfig& cfg);
std::string architecture_name(const ModelConfig& cfg);

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double learning_rate = 0.002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables

  void validate() const;
};

inline constexpr double kBatchNormEpsilon = 1e-8;
inline constexpr double kBatchNormMomentum = 0.99;

/// Trainable tensors in a fixed order:
///   bn_gamma, bn_beta,
///   per layer, per direction: W (gates*H x in), U (gates*H x H), b (gates*H x 1),
///   dense_W (classes x summary), dense_b (classes x 1).
/// Gate blocks are stacked row-wise: LSTM [i; f; g; o], GRU [z; r; n].
struct RnnModel {
  ModelConfig config;
  std::vector<Matrix> params;
  std::vector<std::string> names;
  Vector running_mean;
  Vector running_var;

  RnnModel() = default;
  /// All-zero parameters, gamma = 1, running var = 1.
  explicit RnnModel(const ModelConfig& cfg);

  static constexpr std::size_t kGamma = 0;
  static constexpr std::size_t kBeta = 1;
  std::size_t W(std::size_t layer, std::size_t dir) const { return cell_base(layer, dir); }
  std::size_t U(std::size_t layer, std::size_t dir) const { return cell_base(layer, dir) + 1; }
  std::size_t b(std::size_t layer, std::size_t dir) const { return cell_base(layer, dir) + 2; }
  std::size_t dense_W() const { return 2 + 3 * config.layers * config.directions(); }
  std::size_t dense_b() const { return dense_W() + 1; }

  std::size_t parameter_count() const;
  bool operator==(const RnnModel& other) const;

private:
  std::size_t cell_base(std::size_t layer, std::size_t dir) const {
    return 2 + 3 * (layer * config.directions() + dir);
  }
};

/// Glorot-uniform input and dense matrices, orthogonal recurrent blocks,
/// zero biases except LSTM forget gate = 1.
RnnModel initialize_model(const ModelConfig& cfg, std::uint64_t seed);

/// Padded batch. steps[t] is n_features x batch; padded columns are zero.
struct Batch {
  std::vector<Matrix> steps;
  std::vector<std::size_t> lengths;
  std::vector<int> labels;

  std::size_t size() const { return lengths.size(); }
  std::size_t max_length() const { return steps.size(); }
  bool active(std::size_t t, std::size_t col) const { return t < lengths[col]; }
};

/// Pads to the longest selected sequence, or to `pad_to` if that is longer.
Batch make_batch(std::span<const FrameSequence> data, std::span<const std::size_t> indices,
                 std::size_t pad_to = 0);
Batch make_batch(std::span<const FrameSequence> data);

/// Variational masks: one per sequence per layer and direction, reused at
/// every time step. Entries are 0 or 1/(1-p).
struct DropoutMasks {
  std::vector<Matrix> input;      // [layer * dirs + dir]: in x batch
  std::vector<Matrix> recurrent;  // [layer * dirs + dir]: hidden x batch
};

DropoutMasks sample_dropout_masks(const ModelConfig& cfg, std::size_t batch_size, Rng& rng);

enum class Mode { Train, Eval };

struct ForwardOptions {
  Mode mode = Mode::Eval;
  Rng* rng = nullptr;                   // Train mode with dropout > 0
  const DropoutMasks* masks = nullptr;  // overrides sampling when set
  bool freeze_batch_norm = false;       // Train mode, but use running statistics
};

/// Per-feature statistics of the unmasked inputs of one training batch.
struct BatchNormStats {
  Vector mean;
  Vector var;
  bool valid = false;
};

/// Normalizes unmasked positions; padded positions stay exactly zero.
/// Train mode (unfrozen) uses batch statistics and reports them in `stats`.
std::vector<Matrix> batch_norm_inputs(const RnnModel& model, const Batch& batch,
                                      const ForwardOptions& opts,
                                      BatchNormStats* stats = nullptr);

/// Class probabilities, batch x n_classes.
Matrix forward(const RnnModel& model, const Batch& batch, const ForwardOptions& opts);

struct LossResult {
  double loss = 0.0;
  std::vector<Matrix> grads;  // same layout as RnnModel::params
  Matrix probs;               // batch x n_classes
  BatchNormStats bn;
};

/// Mean cross-entropy and its exact gradient by backpropagation through time.
LossResult loss_and_grads(const RnnModel& model, const Batch& batch,
                          const ForwardOptions& opts);

struct LstmState {
  Matrix h;
  Matrix c;
};

/// Single LSTM step on column-batched inputs. Masks may be null.
LstmState lstm_cell(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                    const Matrix& W, const Matrix& U, const Matrix& b,
                    const Matrix* x_mask = nullptr, const Matrix* h_mask = nullptr);

/// Single GRU step: h = (1 - z) * n + z * h_prev.
Matrix gru_cell(const Matrix& x, const Matrix& h_prev, const Matrix& W, const Matrix& U,
                const Matrix& b, const Matrix* x_mask = nullptr,
                const Matrix* h_mask = nullptr);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const RnnModel& model);
};

void adam_step(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               const TrainConfig& cfg);

/// Scales grads so their global L2 norm is at most max_norm. Returns the
/// norm before scaling.
double clip_global_norm(std::vector<Matrix>& grads, double max_norm);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  RnnModel model;
  std::vector<EpochStats> history;
};

TrainResult train(RnnModel model, std::span<const FrameSequence> data, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);

struct Prediction {
  int label = 0;
  std::vector<double> probs;
};

Prediction predict(const RnnModel& model, const FrameSequence& seq);
std::vector<Prediction> predict_all(const RnnModel& model, std::span<const FrameSequence> data,
                                    std::size_t batch_size = 32);

}  // namespace auscult::rnn
