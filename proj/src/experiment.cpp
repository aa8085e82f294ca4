// SPDX-License-Identifier: Apache-2.0
#include "auscult/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "auscult/error.hpp"
#include "auscult/model_io.hpp"

namespace auscult {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string fmt_double(double v, int significant) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return buf;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + ": '" + std::string(value) + "' is not a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string v = lower(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidConfig,
              std::string(key) + ": '" + std::string(value) + "' is not a boolean");
}

std::string_view split_mode_name(SplitMode m) {
  switch (m) {
    case SplitMode::Stratified: return "stratified";
    case SplitMode::Random: return "random";
    case SplitMode::Patient: return "patient";
  }
  return "stratified";
}

std::string_view unit_name(PathologyUnit u) {
  return u == PathologyUnit::Recording ? "recording" : "cycle";
}

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + " stage: " + e.detail());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::string labels_csv(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  std::string out = "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out += ids[i] + "," + std::to_string(labels[i]) + "\n";
  return out;
}

std::vector<FrameSequence> subset(const std::vector<FrameSequence>& all,
                                  const std::vector<std::size_t>& idx) {
  std::vector<FrameSequence> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

metrics::Split split_sequences(const ExperimentConfig& cfg,
                               const std::vector<FrameSequence>& seqs) {
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto& s : seqs) {
    labels.push_back(s.label);
    if (cfg.split_mode == SplitMode::Patient) groups.push_back(s.patient_id);
  }
  auto sp = metrics::split(labels, metrics::task_class_count(cfg.task), cfg.split_ratio,
                           cfg.effective_split_seed(), cfg.split_mode == SplitMode::Stratified,
                           groups);
  if (sp.train.empty() || sp.test.empty())
    throw Error(ErrorCode::EmptyDataset, "split left an empty train or test side");
  return sp;
}

std::uint64_t init_seed(std::uint64_t seed) { return seed + 0x9E3779B97F4A7C15ull; }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "task",        "setting",          "norm",          "model",
      "epochs",      "batch_size",       "learning_rate", "seed",
      "hidden",      "layers",           "dropout",       "recurrent_dropout",
      "clip_norm",   "data_dir",         "diagnosis_file", "synthetic",
      "synth_n",     "synth_classes",    "synth_seed",    "split",
      "split_ratio", "split_seed",       "pathology_unit", "fmin",
      "fmax",        "n_filters",        "out_dir"};
  return keys;
}

void ExperimentConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = lower(trim(raw_key));
  const std::string_view value = trim(raw_value);
  if (key == "task") task = metrics::task_from_name(value);
  else if (key == "setting") setting = setting_by_id(std::string(value)).id;
  else if (key == "norm" || key == "normalization") normalization = norm_method_from_name(value);
  else if (key == "model") rnn::parse_architecture(value, model);
  else if (key == "epochs") train.epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") train.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "learning_rate") train.learning_rate = parse_number<double>(key, value);
  else if (key == "seed") train.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "hidden") model.hidden = parse_number<std::size_t>(key, value);
  else if (key == "layers") model.layers = parse_number<std::size_t>(key, value);
  else if (key == "dropout") model.dropout = parse_number<double>(key, value);
  else if (key == "recurrent_dropout") model.recurrent_dropout = parse_number<double>(key, value);
  else if (key == "clip_norm") train.clip_norm = parse_number<double>(key, value);
  else if (key == "data_dir") data_dir = std::string(value);
  else if (key == "diagnosis_file") diagnosis_file = std::string(value);
  else if (key == "synthetic") synthetic = parse_bool(key, value);
  else if (key == "synth_n") synth.n_sequences = parse_number<std::size_t>(key, value);
  else if (key == "synth_classes") synth.classes = parse_number<int>(key, value);
  else if (key == "synth_seed") synth.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "split") {
    const std::string v = lower(value);
    if (v == "stratified") split_mode = SplitMode::Stratified;
    else if (v == "random") split_mode = SplitMode::Random;
    else if (v == "patient") split_mode = SplitMode::Patient;
    else throw Error(ErrorCode::InvalidConfig, "split: '" + std::string(value) + "'");
  } else if (key == "split_ratio") split_ratio = parse_number<double>(key, value);
  else if (key == "split_seed") split_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "pathology_unit") {
    const std::string v = lower(value);
    if (v == "recording") pathology_unit = PathologyUnit::Recording;
    else if (v == "cycle") pathology_unit = PathologyUnit::Cycle;
    else throw Error(ErrorCode::InvalidConfig, "pathology_unit: '" + std::string(value) + "'");
  } else if (key == "fmin") mfcc.fmin = parse_number<double>(key, value);
  else if (key == "fmax") mfcc.fmax = parse_number<double>(key, value);
  else if (key == "n_filters") mfcc.n_filters = parse_number<std::size_t>(key, value);
  else if (key == "out_dir") out_dir = std::string(value);
  else throw Error(ErrorCode::InvalidConfig, "unknown key '" + std::string(raw_key) + "'");
}

void ExperimentConfig::parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    set(l.substr(0, eq), l.substr(eq + 1));
  }
}

void ExperimentConfig::load_file(const fs::path& path) { parse_text(read_text_file(path)); }

void ExperimentConfig::validate() const {
  setting_by_id(setting);
  train.validate();
  rnn::ModelConfig m = model;
  m.n_classes = metrics::task_class_count(task);
  m.n_features = setting_by_id(setting).n_features;
  m.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw Error(ErrorCode::InvalidConfig, "split_ratio must lie in (0, 1)");
  if (mfcc.n_coeffs != kCoeffsPerWindow)
    throw Error(ErrorCode::InvalidConfig, "frame settings assume 13 coefficients per window");
  if (synthetic) {
    if (synth.n_sequences == 0 || synth.classes < 2)
      throw Error(ErrorCode::InvalidConfig, "synthetic data needs synth_n > 0, synth_classes >= 2");
  } else {
    if (data_dir.empty() || diagnosis_file.empty())
      throw Error(ErrorCode::InvalidConfig, "data_dir and diagnosis_file are required unless synthetic = true");
    if (!fs::is_directory(data_dir))
      throw Error(ErrorCode::InvalidConfig, "data_dir does not exist: " + data_dir.string());
    if (!fs::exists(diagnosis_file))
      throw Error(ErrorCode::InvalidConfig, "diagnosis_file does not exist: " + diagnosis_file.string());
  }
}

std::string ExperimentConfig::run_name() const {
  return std::string(metrics::task_name(task)) + "_" + rnn::architecture_name(model) + "_" +
         setting + "_" + std::string(norm_method_name(normalization)) + "_" +
         std::to_string(train.seed);
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "task = " << metrics::task_name(task) << '\n'
     << "setting = " << setting << '\n'
     << "norm = " << norm_method_name(normalization) << '\n'
     << "model = " << rnn::architecture_name(model) << '\n'
     << "epochs = " << train.epochs << '\n'
     << "batch_size = " << train.batch_size << '\n'
     << "learning_rate = " << fmt_double(train.learning_rate, 17) << '\n'
     << "seed = " << train.seed << '\n'
     << "hidden = " << model.hidden << '\n'
     << "layers = " << model.layers << '\n'
     << "dropout = " << fmt_double(model.dropout, 17) << '\n'
     << "recurrent_dropout = " << fmt_double(model.recurrent_dropout, 17) << '\n'
     << "clip_norm = " << fmt_double(train.clip_norm, 17) << '\n'
     << "synthetic = " << (synthetic ? "true" : "false") << '\n';
  if (synthetic)
    os << "synth_n = " << synth.n_sequences << '\n'
       << "synth_classes = " << synth.classes << '\n'
       << "synth_seed = " << synth.seed << '\n';
  else
    os << "data_dir = " << data_dir.string() << '\n'
       << "diagnosis_file = " << diagnosis_file.string() << '\n';
  os << "split = " << split_mode_name(split_mode) << '\n'
     << "split_ratio = " << fmt_double(split_ratio, 17) << '\n'
     << "split_seed = " << effective_split_seed() << '\n'
     << "pathology_unit = " << unit_name(pathology_unit) << '\n'
     << "fmin = " << fmt_double(mfcc.fmin, 17) << '\n'
     << "fmax = " << fmt_double(mfcc.fmax, 17) << '\n'
     << "n_filters = " << mfcc.n_filters << '\n';
  return os.str();
}

int task_label(metrics::Task task, Anomaly anomaly, Diagnosis diagnosis) {
  switch (task) {
    case metrics::Task::Anomaly2: return anomaly == Anomaly::Normal ? 0 : 1;
    case metrics::Task::Anomaly4: return static_cast<int>(anomaly);
    case metrics::Task::Patho2: return map_pathology_label(diagnosis, PathologyTask::Binary);
    case metrics::Task::Patho3: return map_pathology_label(diagnosis, PathologyTask::Ternary);
  }
  return 0;
}

PreparedData prepare_sequences(const ExperimentConfig& cfg) {
  const FrameSetting& s = setting_by_id(cfg.setting);
  PreparedData out;

  auto compose = [&](const AudioClip& clip) -> std::optional<FrameSequence> {
    try {
      return compose_frames(clip, s, cfg.mfcc);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CycleTooShort || e.code() == ErrorCode::EmptyAfterGrouping)
        return std::nullopt;
      throw;
    }
  };
  auto add_cycle = [&](const RespiratoryCycle& c) {
    auto seq = compose(c.clip);
    if (!seq) {
      ++out.dropped;
      return;
    }
    seq->label = task_label(cfg.task, c.anomaly, c.diagnosis);
    seq->id = c.id();
    seq->patient_id = c.source.patient_id;
    out.sequences.push_back(std::move(*seq));
  };

  if (cfg.synthetic) {
    auto items = staged("ingest", [&] { return synth_dataset(cfg.synth); });
    staged("features", [&] {
      for (auto& item : items) {
        item.cycle.clip = resample(item.cycle.clip, kCanonicalRate);
        add_cycle(item.cycle);
      }
      return 0;
    });
  } else {
    std::size_t skipped = 0;
    auto recordings = staged("ingest", [&] {
      const auto diagnoses = parse_diagnosis_table(read_text_file(cfg.diagnosis_file));
      return load_recordings(cfg.data_dir, diagnoses, kCanonicalRate, &skipped);
    });
    if (skipped)
      out.warnings.push_back(std::to_string(skipped) +
                             " recordings skipped (no annotation or no diagnosis)");
    const bool per_recording = !metrics::is_anomaly_task(cfg.task) &&
                               cfg.pathology_unit == PathologyUnit::Recording;
    for (const auto& rec : recordings) {
      auto cycles = staged("extract", [&] { return extract_cycles(rec); });
      staged("features", [&] {
        if (!per_recording) {
          for (const auto& c : cycles) add_cycle(c);
          return 0;
        }
        FrameSequence joined;
        for (const auto& c : cycles) {
          auto seq = compose(c.clip);
          if (!seq) continue;
          joined.frames.insert(joined.frames.end(), std::make_move_iterator(seq->frames.begin()),
                               std::make_move_iterator(seq->frames.end()));
        }
        if (joined.frames.empty()) {
          ++out.dropped;
          return 0;
        }
        joined.label = task_label(cfg.task, Anomaly::Normal, rec.diagnosis);
        joined.id = rec.source.stem();
        joined.patient_id = rec.source.patient_id;
        out.sequences.push_back(std::move(joined));
        return 0;
      });
    }
  }

  if (out.dropped)
    out.warnings.push_back(std::to_string(out.dropped) + " sequences dropped: shorter than one " +
                           s.id + " frame");
  if (out.sequences.empty())
    throw Error(ErrorCode::EmptyDataset, "no usable sequences for setting " + s.id);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  staged("config", [&] {
    cfg.validate();
    return 0;
  });
  const FrameSetting& setting = setting_by_id(cfg.setting);

  ExperimentResult result;
  PreparedData data = prepare_sequences(cfg);
  result.warnings = data.warnings;

  const auto sp = staged("split", [&] { return split_sequences(cfg, data.sequences); });
  auto train_set = subset(data.sequences, sp.train);
  auto test_set = subset(data.sequences, sp.test);
  result.n_train = train_set.size();
  result.n_test = test_set.size();

  const NormStats stats = staged("normalize", [&] {
    NormStats st = fit_normalization(std::span<const FrameSequence>(train_set), cfg.normalization);
    apply_normalization(st, std::span<FrameSequence>(train_set));
    apply_normalization(st, std::span<FrameSequence>(test_set));
    return st;
  });

  rnn::ModelConfig mcfg = cfg.model;
  mcfg.n_classes = metrics::task_class_count(cfg.task);
  mcfg.n_features = setting.n_features;
  auto trained = staged("train", [&] {
    return rnn::train(rnn::initialize_model(mcfg, init_seed(cfg.train.seed)), train_set, cfg.train);
  });
  result.history = trained.history;

  std::vector<int> preds, truths;
  std::vector<std::string> ids;
  staged("evaluate", [&] {
    for (const auto& p : rnn::predict_all(trained.model, test_set)) preds.push_back(p.label);
    return 0;
  });
  for (const auto& s : test_set) {
    truths.push_back(s.label);
    ids.push_back(s.id);
  }
  result.report = metrics::report(
      metrics::confusion(preds, truths, mcfg.n_classes), cfg.task);

  result.run_dir = cfg.out_dir / cfg.run_name();
  staged("write", [&] {
    std::error_code ec;
    fs::create_directories(result.run_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + result.run_dir.string());
    write_text(result.run_dir / "report.json", metrics::report_to_json(result.report));
    write_text(result.run_dir / "confusion.csv", metrics::confusion_to_csv(result.report.confusion));
    std::string hist = "epoch,loss,accuracy\n";
    for (const auto& e : result.history)
      hist += std::to_string(e.epoch) + "," + fmt_double(e.loss, 17) + "," +
              fmt_double(e.accuracy, 17) + "\n";
    write_text(result.run_dir / "history.csv", hist);
    ModelBundle bundle{trained.model, stats, setting.id, std::string(metrics::task_name(cfg.task)),
                       metrics::is_anomaly_task(cfg.task) ? "" : std::string(unit_name(cfg.pathology_unit))};
    save_bundle(result.run_dir / "model.bin", bundle);
    save_norm_stats(result.run_dir / "stats.bin", stats);
    write_text(result.run_dir / "predictions.csv", labels_csv(ids, preds));
    write_text(result.run_dir / "truth.csv", labels_csv(ids, truths));
    write_text(result.run_dir / "config.txt", cfg.to_text());
    return 0;
  });
  return result;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepAxes& axes) {
  if (axes.settings.empty() || axes.models.empty() || axes.normalizations.empty())
    throw Error(ErrorCode::InvalidConfig, "every sweep axis needs at least one value");
  for (const auto& s : axes.settings) setting_by_id(s);
  for (const auto& m : axes.models) {
    rnn::ModelConfig probe;
    rnn::parse_architecture(m, probe);
  }
  for (const auto& n : axes.normalizations) norm_method_from_name(n);

  std::vector<SweepRow> rows;
  for (const auto& s : axes.settings)
    for (const auto& m : axes.models)
      for (const auto& n : axes.normalizations) {
        ExperimentConfig cfg = base;
        cfg.setting = s;
        rnn::parse_architecture(m, cfg.model);
        cfg.normalization = norm_method_from_name(n);

        SweepRow row;
        row.setting = s;
        row.model = rnn::architecture_name(cfg.model);
        row.normalization = std::string(norm_method_name(cfg.normalization));
        const fs::path existing = cfg.out_dir / cfg.run_name() / "report.json";
        try {
          if (fs::exists(existing)) {
            row.report = metrics::report_from_json(read_text_file(existing));
            row.status = "resumed";
          } else {
            row.report = run_experiment(cfg).report;
            row.status = "ok";
          }
        } catch (const std::exception& e) {
          row.status = "failed";
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
  return rows;
}

std::string sweep_to_csv(const ExperimentConfig& base, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "task,model,setting,norm,seed,status";
  for (const auto& f : metrics::report_field_names()) os << ',' << f;
  os << ",error\n";
  for (const auto& r : rows) {
    os << metrics::task_name(base.task) << ',' << r.model << ',' << r.setting << ','
       << r.normalization << ',' << base.train.seed << ',' << r.status;
    for (const auto& f : metrics::report_field_names()) {
      os << ',';
      if (r.report)
        if (auto v = metrics::report_field(*r.report, f)) os << fmt_double(*v, 17);
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << ",\"" << err << "\"\n";
  }
  return os.str();
}

metrics::MetricsReport score_prediction_text(std::string_view preds, std::string_view truths,
                                             metrics::Task task) {
  const auto names = metrics::task_class_names(task);
  auto parse = [&](std::string_view text, const char* what) {
    std::map<std::string, int> out;
    std::istringstream in{std::string(text)};
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      std::string_view l = trim(line);
      if (l.empty()) continue;
      const auto comma = l.find(',');
      if (comma == std::string_view::npos)
        throw Error(ErrorCode::BadFieldCount, std::string(what) + ": '" + std::string(l) + "'");
      const std::string id(trim(l.substr(0, comma)));
      const std::string label(trim(l.substr(comma + 1)));
      if (first && lower(id) == "id" && lower(label) == "label") {
        first = false;
        continue;
      }
      first = false;
      int value = -1;
      if (!label.empty() && std::all_of(label.begin(), label.end(), [](unsigned char c) {
            return std::isdigit(c);
          })) {
        const auto v = std::stoul(label);
        if (v < names.size()) value = static_cast<int>(v);
      } else {
        for (std::size_t c = 0; c < names.size(); ++c)
          if (lower(names[c]) == lower(label)) value = static_cast<int>(c);
      }
      if (value < 0)
        throw Error(ErrorCode::UnknownLabel, std::string(what) + " id " + id + ": '" + label + "'");
      if (!out.emplace(id, value).second)
        throw Error(ErrorCode::IdMismatch, std::string(what) + " repeats id " + id);
    }
    return out;
  };
  const auto p = parse(preds, "predictions");
  const auto t = parse(truths, "truths");
  std::vector<int> pv, tv;
  for (const auto& [id, label] : t) {
    auto it = p.find(id);
    if (it == p.end()) throw Error(ErrorCode::IdMismatch, "no prediction for id " + id);
    pv.push_back(it->second);
    tv.push_back(label);
  }
  if (p.size() != t.size()) {
    for (const auto& [id, _] : p)
      if (!t.count(id)) throw Error(ErrorCode::IdMismatch, "no truth for id " + id);
  }
  return metrics::report(metrics::confusion(pv, tv, names.size()), task);
}

metrics::MetricsReport score_predictions(const fs::path& pred_file, const fs::path& truth_file,
                                         metrics::Task task) {
  return score_prediction_text(read_text_file(pred_file), read_text_file(truth_file), task);
}

EvaluationResult evaluate_model(const fs::path& model_path, const ExperimentConfig& cfg,
                                bool test_split_only, const fs::path& out_dir) {
  const ModelBundle bundle = staged("load", [&] { return load_bundle(model_path); });
  ExperimentConfig c = cfg;
  c.task = metrics::task_from_name(bundle.task);
  c.setting = bundle.setting_id;
  if (bundle.pathology_unit == "cycle") c.pathology_unit = PathologyUnit::Cycle;
  else if (bundle.pathology_unit == "recording") c.pathology_unit = PathologyUnit::Recording;
  staged("config", [&] {
    c.validate();
    return 0;
  });

  PreparedData data = prepare_sequences(c);
  std::vector<FrameSequence> seqs = std::move(data.sequences);
  if (test_split_only) {
    const auto sp = staged("split", [&] { return split_sequences(c, seqs); });
    seqs = subset(seqs, sp.test);
  }
  staged("normalize", [&] {
    apply_normalization(bundle.stats, std::span<FrameSequence>(seqs));
    return 0;
  });

  EvaluationResult res;
  const auto preds = staged("evaluate", [&] { return rnn::predict_all(bundle.model, seqs); });
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    res.ids.push_back(seqs[i].id);
    res.predictions.push_back(preds[i].label);
    res.truths.push_back(seqs[i].label);
  }
  res.report = metrics::report(
      metrics::confusion(res.predictions, res.truths, metrics::task_class_count(c.task)), c.task);

  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string());
    write_text(out_dir / "report.json", metrics::report_to_json(res.report));
    write_text(out_dir / "confusion.csv", metrics::confusion_to_csv(res.report.confusion));
    write_text(out_dir / "predictions.csv", labels_csv(res.ids, res.predictions));
    write_text(out_dir / "truth.csv", labels_csv(res.ids, res.truths));
  }
  return res;
}

std::string window_features_csv(const AudioClip& clip, const FrameSetting& s,
                                const dsp::MfccConfig& cfg) {
  std::string out;
  for (const auto& row : window_features(clip, s, cfg)) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += fmt_double(row[j], 9);
    }
    out += '\n';
  }
  return out;
}

std::string frames_csv(std::span<const FrameSequence> sequences) {
  std::string out;
  for (const auto& seq : sequences)
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
      out += seq.id + "," + std::to_string(f);
      for (double v : seq.frames[f]) out += "," + fmt_double(v, 9);
      out += '\n';
    }
  return out;
}

std::size_t write_synthetic_corpus(const fs::path& dir, const SynthSpec& spec) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string());
  const auto items = synth_dataset(spec);
  std::string diagnosis;
  for (const auto& item : items) {
    const auto& c = item.cycle;
    const std::string stem = c.source.stem();
    write_wav_file(dir / (stem + ".wav"), c.clip);
    const bool crackles = c.anomaly == Anomaly::Crackles || c.anomaly == Anomaly::Both;
    const bool wheezes = c.anomaly == Anomaly::Wheezes || c.anomaly == Anomaly::Both;
    write_text(dir / (stem + ".txt"),
               "0 " + fmt_double(c.clip.duration_s(), 17) + " " + (crackles ? "1" : "0") + " " +
                   (wheezes ? "1" : "0") + "\n");
    diagnosis += c.source.patient_id + "\t" + std::string(diagnosis_name(c.diagnosis)) + "\n";
  }
  write_text(dir / "diagnosis.txt", diagnosis);
  return items.size();
}

}  // namespace auscult
