// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace auscult::metrics {

enum class Task { Anomaly2, Anomaly4, Patho2, Patho3 };

std::string_view task_name(Task t);
Task task_from_name(std::string_view name);
std::size_t task_class_count(Task t);
/// Class 0 is always the normal/healthy class.
std::vector<std::string> task_class_names(Task t);
bool is_anomaly_task(Task t);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded train/test partition of item indices. Stratified mode splits each
/// class by `ratio` (largest-remainder rounding so the train total is
/// round(ratio * n)). With `groups` given, whole groups (e.g. patients) are
/// assigned to one side and stratification is ignored.
Split split(std::span<const int> labels, std::size_t n_classes, double ratio,
            std::uint64_t seed, bool stratify,
            std::span<const std::string> groups = {});

class ConfusionMatrix {
public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n_classes, std::vector<std::string> names = {});

  std::size_t n_classes() const { return n_; }
  std::int64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * n_ + pred]; }
  std::int64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * n_ + pred]; }
  std::int64_t row_total(std::size_t truth) const;
  std::int64_t col_total(std::size_t pred) const;
  std::int64_t total() const;
  const std::vector<std::string>& class_names() const { return names_; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  /// Compares counts only; class names are labels for output.
  bool operator==(const ConfusionMatrix& other) const {
    return n_ == other.n_ && counts_ == other.counts_;
  }

private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<std::string> names_;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths,
                          std::size_t n_classes);

/// normal / crackles / wheezes / both -> normal / abnormal.
int collapse_anomaly_label(int label4);
ConfusionMatrix collapse_anomaly(const ConfusionMatrix& cm4);

/// Undefined (zero-denominator) values are nullopt, never 0.
struct MicroScores {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> icbhi_score;
};

/// Sensitivity over all non-normal classes, specificity on class 0.
MicroScores icbhi_micro(const ConfusionMatrix& cm, Task task);

struct MacroScores {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::vector<std::optional<double>> class_precision;
  std::vector<std::optional<double>> class_recall;
  std::vector<std::size_t> never_predicted;  // precision counted as 0
};

MacroScores macro(const ConfusionMatrix& cm);

struct MetricsReport {
  Task task = Task::Anomaly2;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> icbhi_score;
  std::optional<double> macro_accuracy;
  std::optional<double> macro_precision;
  std::optional<double> macro_recall;
  std::optional<double> macro_f1;
  std::vector<std::optional<double>> class_precision;
  std::vector<std::optional<double>> class_recall;
  std::vector<std::string> warnings;
  ConfusionMatrix confusion;
};

MetricsReport report(const ConfusionMatrix& cm, Task task);

/// Named scalar field of a report, e.g. "icbhi_score"; nullopt when undefined.
std::optional<double> report_field(const MetricsReport& r, std::string_view name);
const std::vector<std::string>& report_field_names();

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(std::string_view json);

/// Aligned plain-text table: header and one row per (label, report).
std::string report_table(std::span<const std::pair<std::string, MetricsReport>> rows);

std::string confusion_to_csv(const ConfusionMatrix& cm);
ConfusionMatrix confusion_from_csv(std::string_view csv);

}  // namespace auscult::metrics
