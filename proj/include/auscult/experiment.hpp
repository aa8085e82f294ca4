// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auscult/dataset.hpp"
#include "auscult/dsp.hpp"
#include "auscult/frames.hpp"
#include "auscult/metrics.hpp"
#include "auscult/normalize.hpp"
#include "auscult/rnn.hpp"

namespace auscult {

enum class SplitMode { Stratified, Random, Patient };
enum class PathologyUnit { Recording, Cycle };

struct ExperimentConfig {
  metrics::Task task = metrics::Task::Anomaly2;
  std::string setting = "S3";
  NormMethod normalization = NormMethod::ZScore;
  rnn::ModelConfig model;  // n_classes and n_features are derived at run time
  rnn::TrainConfig train;

  std::filesystem::path data_dir;
  std::filesystem::path diagnosis_file;
  bool synthetic = false;
  SynthSpec synth;

  SplitMode split_mode = SplitMode::Stratified;
  double split_ratio = 0.8;
  std::optional<std::uint64_t> split_seed;  // defaults to train.seed
  PathologyUnit pathology_unit = PathologyUnit::Recording;
  dsp::MfccConfig mfcc;
  std::filesystem::path out_dir = "runs";

  /// Applies one `key = value` setting; throws InvalidConfig on unknown keys
  /// or malformed values.
  void set(std::string_view key, std::string_view value);
  /// Flat `key = value` text, `#` starts a comment.
  void parse_text(std::string_view text);
  void load_file(const std::filesystem::path& path);
  void validate() const;

  std::uint64_t effective_split_seed() const { return split_seed.value_or(train.seed); }
  /// <task>_<model>_<setting>_<norm>_<seed>
  std::string run_name() const;
  std::string to_text() const;
};

/// Keys accepted by ExperimentConfig::set, in documentation order.
const std::vector<std::string>& config_keys();

struct PreparedData {
  std::vector<FrameSequence> sequences;
  std::size_t dropped = 0;  // cycles/recordings too short for the setting
  std::vector<std::string> warnings;
};

/// ingest -> resample -> cycle extraction -> frame composition, labelled for
/// the configured task. Each sequence is one cycle (anomaly tasks, or
/// pathology per-cycle) or one recording's cycles concatenated.
PreparedData prepare_sequences(const ExperimentConfig& cfg);

/// Builds the task label of one cycle.
int task_label(metrics::Task task, Anomaly anomaly, Diagnosis diagnosis);

struct ExperimentResult {
  metrics::MetricsReport report;
  std::filesystem::path run_dir;
  std::vector<rnn::EpochStats> history;
  std::vector<std::string> warnings;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Full pipeline; writes report.json, confusion.csv, history.csv, model.bin,
/// stats.bin, predictions.csv and truth.csv into out_dir/run_name().
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SweepAxes {
  std::vector<std::string> settings;
  std::vector<std::string> models;
  std::vector<std::string> normalizations;
};

struct SweepRow {
  std::string setting;
  std::string model;
  std::string normalization;
  std::string status;  // "ok", "resumed", "failed"
  std::string error;
  std::optional<metrics::MetricsReport> report;
};

/// Cartesian product of the axes; cells with an existing report.json are
/// loaded instead of rerun. Failures are recorded per row.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepAxes& axes);
std::string sweep_to_csv(const ExperimentConfig& base, const std::vector<SweepRow>& rows);

/// Offline scoring of `id,label` CSV files; labels are class indices or names.
metrics::MetricsReport score_predictions(const std::filesystem::path& pred_file,
                                         const std::filesystem::path& truth_file,
                                         metrics::Task task);
metrics::MetricsReport score_prediction_text(std::string_view preds, std::string_view truths,
                                             metrics::Task task);

struct EvaluationResult {
  metrics::MetricsReport report;
  std::vector<std::string> ids;
  std::vector<int> predictions;
  std::vector<int> truths;
};

/// Scores a saved model on the configured data. The task, frame setting and
/// normalization come from the model file. With `test_split_only`, only the
/// test side of the configured split is used.
EvaluationResult evaluate_model(const std::filesystem::path& model_path,
                                const ExperimentConfig& cfg, bool test_split_only,
                                const std::filesystem::path& out_dir = {});

/// One row per window, 13 columns, 9 significant digits.
std::string window_features_csv(const AudioClip& clip, const FrameSetting& s,
                                const dsp::MfccConfig& cfg);
/// `sequence id, frame index, features...` per frame.
std::string frames_csv(std::span<const FrameSequence> sequences);

/// Writes ICBHI-style files (wav + annotation per item, diagnosis table).
/// Returns the number of recordings written.
std::size_t write_synthetic_corpus(const std::filesystem::path& dir, const SynthSpec& spec);

}  // namespace auscult
