// SPDX-License-Identifier: Apache-2.0
#include "auscult/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "auscult/error.hpp"

namespace auscult::metrics {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) return std::nullopt;
    sum += *v;
  }
  return values.empty() ? std::nullopt : std::optional<double>(sum / values.size());
}

}  // namespace

std::string_view task_name(Task t) {
  switch (t) {
    case Task::Anomaly2: return "Anomaly2";
    case Task::Anomaly4: return "Anomaly4";
    case Task::Patho2: return "Patho2";
    case Task::Patho3: return "Patho3";
  }
  return "Anomaly2";
}

Task task_from_name(std::string_view name) {
  const std::string key = lower(name);
  for (Task t : {Task::Anomaly2, Task::Anomaly4, Task::Patho2, Task::Patho3})
    if (lower(task_name(t)) == key) return t;
  throw Error(ErrorCode::InvalidConfig, "unknown task '" + std::string(name) + "'");
}

std::size_t task_class_count(Task t) {
  switch (t) {
    case Task::Anomaly2: return 2;
    case Task::Anomaly4: return 4;
    case Task::Patho2: return 2;
    case Task::Patho3: return 3;
  }
  return 2;
}

std::vector<std::string> task_class_names(Task t) {
  switch (t) {
    case Task::Anomaly2: return {"normal", "crackles_or_wheezes"};
    case Task::Anomaly4: return {"normal", "crackles", "wheezes", "both"};
    case Task::Patho2: return {"healthy", "unhealthy"};
    case Task::Patho3: return {"healthy", "chronic", "non-chronic"};
  }
  return {};
}

bool is_anomaly_task(Task t) { return t == Task::Anomaly2 || t == Task::Anomaly4; }

Split split(std::span<const int> labels, std::size_t n_classes, double ratio,
            std::uint64_t seed, bool stratify, std::span<const std::string> groups) {
  const std::size_t n = labels.size();
  if (n < 2) throw Error(ErrorCode::EmptyDataset, "need at least 2 items to split");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw Error(ErrorCode::InvalidConfig, "split ratio must lie in (0, 1)");
  if (!groups.empty() && groups.size() != n)
    throw Error(ErrorCode::LengthMismatch, "groups and labels differ in length");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));

  std::mt19937_64 rng(seed);
  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<char> in_train(n, 0);

  if (!groups.empty()) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      auto& m = members[groups[i]];
      if (m.empty()) order.push_back(groups[i]);
      m.push_back(i);
    }
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t count = 0;
    for (const auto& g : order) {
      if (count >= target) break;
      for (auto i : members[g]) in_train[i] = 1;
      count += members[g].size();
    }
  } else if (stratify) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    std::vector<std::size_t> quota(n_classes);
    std::vector<double> frac(n_classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (by_class[c].empty())
        throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c) + " has no items");
      const double exact = ratio * static_cast<double>(by_class[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      frac[c] = exact - static_cast<double>(quota[c]);
      assigned += quota[c];
    }
    std::vector<std::size_t> rank(n_classes);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < target && k < n_classes; ++k) {
      const std::size_t c = rank[k];
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        ++assigned;
      }
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      for (std::size_t k = 0; k < quota[c]; ++k) in_train[by_class[c][k]] = 1;
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < target; ++k) in_train[order[k]] = 1;
  }

  Split s;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? s.train : s.test).push_back(i);
  return s;
}

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::string> names)
    : n_(n_classes), counts_(n_classes * n_classes, 0), names_(std::move(names)) {
  if (names_.empty())
    for (std::size_t c = 0; c < n_; ++c) names_.push_back("class" + std::to_string(c));
  if (names_.size() != n_)
    throw Error(ErrorCode::LengthMismatch, "class name count differs from class count");
}

std::int64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::col_total(std::size_t pred) const {
  std::int64_t s = 0;
  for (std::size_t t = 0; t < n_; ++t) s += at(t, pred);
  return s;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorCode::LengthMismatch, "confusion matrix sizes differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths,
                          std::size_t n_classes) {
  if (preds.size() != truths.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(truths.size()) + " truths");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], t = truths[i];
    if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= n_classes ||
        static_cast<std::size_t>(t) >= n_classes)
      throw Error(ErrorCode::LabelOutOfRange, "pair " + std::to_string(i));
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

int collapse_anomaly_label(int label4) { return label4 == 0 ? 0 : 1; }

ConfusionMatrix collapse_anomaly(const ConfusionMatrix& cm4) {
  if (cm4.n_classes() != 4) throw Error(ErrorCode::DimensionMismatch, "expected a 4-class matrix");
  ConfusionMatrix cm2(2, task_class_names(Task::Anomaly2));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t p = 0; p < 4; ++p)
      cm2.at(static_cast<std::size_t>(collapse_anomaly_label(static_cast<int>(t))),
             static_cast<std::size_t>(collapse_anomaly_label(static_cast<int>(p)))) +=
          cm4.at(t, p);
  return cm2;
}

MicroScores icbhi_micro(const ConfusionMatrix& cm, Task task) {
  if (cm.n_classes() != task_class_count(task))
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(cm.n_classes()) + "-class matrix for task " +
                    std::string(task_name(task)));
  MicroScores s;
  if (const auto n_normal = cm.row_total(0); n_normal > 0)
    s.specificity = static_cast<double>(cm.at(0, 0)) / static_cast<double>(n_normal);
  std::int64_t hits = 0, total = 0;
  for (std::size_t c = 1; c < cm.n_classes(); ++c) {
    hits += cm.at(c, c);
    total += cm.row_total(c);
  }
  if (total > 0) s.sensitivity = static_cast<double>(hits) / static_cast<double>(total);
  if (s.sensitivity && s.specificity) s.icbhi_score = (*s.sensitivity + *s.specificity) / 2.0;
  return s;
}

MacroScores macro(const ConfusionMatrix& cm) {
  MacroScores m;
  const std::size_t n = cm.n_classes();
  std::vector<std::optional<double>> f1(n);
  m.class_precision.resize(n);
  m.class_recall.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto hits = static_cast<double>(cm.at(c, c));
    if (const auto rows = cm.row_total(c); rows > 0)
      m.class_recall[c] = hits / static_cast<double>(rows);
    if (const auto cols = cm.col_total(c); cols > 0) {
      m.class_precision[c] = hits / static_cast<double>(cols);
    } else {
      m.class_precision[c] = 0.0;
      m.never_predicted.push_back(c);
    }
    if (m.class_recall[c]) {
      const double p = *m.class_precision[c], r = *m.class_recall[c];
      f1[c] = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
  }
  m.recall = mean_of(m.class_recall);
  m.accuracy = m.recall;
  m.precision = mean_of(m.class_precision);
  m.f1 = mean_of(f1);
  return m;
}

MetricsReport report(const ConfusionMatrix& cm, Task task) {
  const MicroScores micro = icbhi_micro(cm, task);
  const MacroScores mac = macro(cm);
  MetricsReport r;
  r.task = task;
  r.sensitivity = micro.sensitivity;
  r.specificity = micro.specificity;
  r.icbhi_score = micro.icbhi_score;
  r.macro_accuracy = mac.accuracy;
  r.macro_precision = mac.precision;
  r.macro_recall = mac.recall;
  r.macro_f1 = mac.f1;
  r.class_precision = mac.class_precision;
  r.class_recall = mac.class_recall;
  r.confusion = ConfusionMatrix(cm.n_classes(), task_class_names(task));
  for (std::size_t t = 0; t < cm.n_classes(); ++t)
    for (std::size_t p = 0; p < cm.n_classes(); ++p) r.confusion.at(t, p) = cm.at(t, p);

  const auto names = task_class_names(task);
  for (auto c : mac.never_predicted)
    r.warnings.push_back("class '" + names[c] + "' never predicted; precision counted as 0");
  for (const auto& f : report_field_names())
    if (!report_field(r, f)) r.warnings.push_back(f + " undefined (zero denominator)");
  return r;
}

const std::vector<std::string>& report_field_names() {
  static const std::vector<std::string> names = {
      "sensitivity",    "specificity",     "icbhi_score", "macro_accuracy",
      "macro_precision", "macro_recall",   "macro_f1"};
  return names;
}

std::optional<double> report_field(const MetricsReport& r, std::string_view name) {
  if (name == "sensitivity") return r.sensitivity;
  if (name == "specificity") return r.specificity;
  if (name == "icbhi_score") return r.icbhi_score;
  if (name == "macro_accuracy") return r.macro_accuracy;
  if (name == "macro_precision") return r.macro_precision;
  if (name == "macro_recall") return r.macro_recall;
  if (name == "macro_f1") return r.macro_f1;
  throw Error(ErrorCode::InvalidConfig, "unknown report field '" + std::string(name) + "'");
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(r.task));
  for (const auto& f : report_field_names()) j[f] = opt_json(report_field(r, f));
  const auto names = task_class_names(r.task);
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.class_precision.size(); ++c) {
    nlohmann::ordered_json e;
    e["class"] = c < names.size() ? names[c] : std::to_string(c);
    e["precision"] = opt_json(r.class_precision[c]);
    e["recall"] = opt_json(r.class_recall[c]);
    per_class.push_back(e);
  }
  j["per_class"] = per_class;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < r.confusion.n_classes(); ++t) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < r.confusion.n_classes(); ++p) row.push_back(r.confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadModelFile, std::string("report JSON: ") + e.what());
  }
  MetricsReport r;
  r.task = task_from_name(j.at("task").get<std::string>());
  r.sensitivity = opt_from_json(j.at("sensitivity"));
  r.specificity = opt_from_json(j.at("specificity"));
  r.icbhi_score = opt_from_json(j.at("icbhi_score"));
  r.macro_accuracy = opt_from_json(j.at("macro_accuracy"));
  r.macro_precision = opt_from_json(j.at("macro_precision"));
  r.macro_recall = opt_from_json(j.at("macro_recall"));
  r.macro_f1 = opt_from_json(j.at("macro_f1"));
  for (const auto& e : j.at("per_class")) {
    r.class_precision.push_back(opt_from_json(e.at("precision")));
    r.class_recall.push_back(opt_from_json(e.at("recall")));
  }
  const auto& rows = j.at("confusion");
  r.confusion = ConfusionMatrix(rows.size(), task_class_names(r.task));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t p = 0; p < rows[t].size(); ++p)
      r.confusion.at(t, p) = rows[t][p].get<std::int64_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string report_table(std::span<const std::pair<std::string, MetricsReport>> rows) {
  std::size_t label_w = 6;
  for (const auto& [label, _] : rows) label_w = std::max(label_w, label.size());
  std::ostringstream os;
  auto cell = [&](const std::optional<double>& v) {
    os << ' ' << std::setw(8);
    if (v)
      os << std::fixed << std::setprecision(4) << *v;
    else
      os << "n/a";
  };
  os << std::left << std::setw(static_cast<int>(label_w)) << "Method" << std::right;
  for (const char* h : {"Spec", "Sens", "Score", "Acc", "Prec", "Rec", "F1"})
    os << ' ' << std::setw(8) << h;
  os << '\n';
  for (const auto& [label, r] : rows) {
    os << std::left << std::setw(static_cast<int>(label_w)) << label << std::right;
    cell(r.specificity);
    cell(r.sensitivity);
    cell(r.icbhi_score);
    cell(r.macro_accuracy);
    cell(r.macro_precision);
    cell(r.macro_recall);
    cell(r.macro_f1);
    os << '\n';
  }
  return os.str();
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "truth\\pred";
  for (const auto& n : cm.class_names()) os << ',' << n;
  os << '\n';
  for (std::size_t t = 0; t < cm.n_classes(); ++t) {
    os << cm.class_names()[t];
    for (std::size_t p = 0; p < cm.n_classes(); ++p) os << ',' << cm.at(t, p);
    os << '\n';
  }
  return os.str();
}

ConfusionMatrix confusion_from_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  auto cells = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) out.push_back(c);
    return out;
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::BadModelFile, "empty confusion CSV");
  auto header = cells(line);
  if (header.size() < 3) throw Error(ErrorCode::BadModelFile, "confusion CSV header too short");
  std::vector<std::string> names(header.begin() + 1, header.end());
  ConfusionMatrix cm(names.size(), names);
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (!std::getline(in, line)) throw Error(ErrorCode::BadModelFile, "confusion CSV truncated");
    auto row = cells(line);
    if (row.size() != names.size() + 1)
      throw Error(ErrorCode::BadModelFile, "confusion CSV row width");
    for (std::size_t p = 0; p < names.size(); ++p) cm.at(t, p) = std::stoll(row[p + 1]);
  }
  return cm;
}

}  // namespace auscult::metrics
