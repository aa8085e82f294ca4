// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "auscult/auscult.h"

namespace {

struct ConfigDeleter {
  void operator()(ausc_config* c) const { ausc_config_destroy(c); }
};
struct ReportDeleter {
  void operator()(ausc_report* r) const { ausc_report_destroy(r); }
};
using ConfigPtr = std::unique_ptr<ausc_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<ausc_report, ReportDeleter>;

int fail(ausc_status s) {
  std::fprintf(stderr, "error: %s\n", ausc_last_error());
  return static_cast<int>(s);
}

// Flags shared by train, evaluate and sweep. Unset flags leave the config
// file (or the defaults) alone.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::string> extra;

  void add(CLI::App* app, bool with_seed, bool seed_required) {
    app->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    static const char* keys[] = {"task",       "setting",      "norm",           "model",
                                 "epochs",     "batch_size",   "learning_rate",  "hidden",
                                 "layers",     "dropout",      "recurrent_dropout", "clip_norm",
                                 "data_dir",   "diagnosis_file", "synthetic",    "synth_n",
                                 "synth_classes", "synth_seed", "split",         "split_ratio",
                                 "split_seed", "pathology_unit", "out_dir"};
    for (const char* k : keys) {
      std::string flag = std::string("--") + k;
      for (auto& ch : flag) if (ch == '_') ch = '-';
      app->add_option(flag, values[k]);
    }
    if (with_seed) {
      auto* opt = app->add_option("--seed", values["seed"], "training seed");
      if (seed_required) opt->required();
    }
    app->add_option("--set", extra, "extra key=value override (repeatable)");
  }

  ausc_status build(ConfigPtr& out) const {
    ausc_config* raw = nullptr;
    if (auto s = ausc_config_create(&raw); s != AUSC_OK) return s;
    out.reset(raw);
    if (!config_file.empty())
      if (auto s = ausc_config_load_file(raw, config_file.c_str()); s != AUSC_OK) return s;
    for (const auto& [k, v] : values)
      if (!v.empty())
        if (auto s = ausc_config_set(raw, k.c_str(), v.c_str()); s != AUSC_OK) return s;
    for (const auto& kv : extra) {
      const auto eq = kv.find('=');
      const std::string k = kv.substr(0, eq);
      const std::string v = eq == std::string::npos ? "" : kv.substr(eq + 1);
      if (auto s = ausc_config_set(raw, k.c_str(), v.c_str()); s != AUSC_OK) return s;
    }
    return AUSC_OK;
  }
};

std::string report_text(const ausc_report* r, const std::string& label) {
  std::size_t needed = 0;
  ausc_report_to_text(r, label.c_str(), nullptr, 0, &needed);
  std::string buf(needed, '\0');
  ausc_report_to_text(r, label.c_str(), buf.data(), buf.size(), &needed);
  buf.resize(needed ? needed - 1 : 0);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Respiratory sound classification with MFCC features and recurrent networks"};
  app.set_version_flag("--version", std::string(ausc_version()));
  app.require_subcommand(1);

  auto* features = app.add_subcommand("features", "per-window MFCCs of one WAV file as CSV");
  std::string wav, setting = "S3", csv_out;
  features->add_option("wav", wav, "input WAV")->required()->check(CLI::ExistingFile);
  features->add_option("--setting", setting, "frame setting S1..S7");
  features->add_option("-o,--out", csv_out, "output CSV")->required();

  auto* train = app.add_subcommand("train", "train and evaluate one configuration");
  ConfigFlags train_flags;
  train_flags.add(train, true, true);

  auto* evaluate = app.add_subcommand("evaluate", "score a saved model");
  ConfigFlags eval_flags;
  eval_flags.add(evaluate, true, false);
  std::string model_path, eval_out;
  bool all_data = false;
  evaluate->add_option("--model-file", model_path, "model.bin from a training run")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_flag("--all", all_data, "use every sequence instead of the test split");
  evaluate->add_option("-o,--out", eval_out, "directory for report and predictions");

  auto* sweep = app.add_subcommand("sweep", "grid over settings, models and normalizations");
  ConfigFlags sweep_flags;
  sweep_flags.add(sweep, true, true);
  std::string settings = "S1,S2,S3,S4,S5,S6,S7", models = "LSTM,GRU,BiLSTM,BiGRU",
              norms = "zscore,minmax";
  sweep->add_option("--settings", settings, "comma-separated frame settings");
  sweep->add_option("--models", models, "comma-separated architectures");
  sweep->add_option("--norms", norms, "comma-separated normalizations");

  auto* score = app.add_subcommand("score", "metrics from prediction and truth CSVs");
  std::string pred_csv, truth_csv, score_task = "anomaly2";
  score->add_option("predictions", pred_csv)->required()->check(CLI::ExistingFile);
  score->add_option("truth", truth_csv)->required()->check(CLI::ExistingFile);
  score->add_option("--task", score_task, "anomaly2, anomaly4, patho2 or patho3");

  auto* synth = app.add_subcommand("synth", "write a synthetic ICBHI-style corpus");
  std::string synth_dir;
  std::size_t synth_n = 200;
  int synth_classes = 2;
  std::uint64_t synth_seed = 1;
  synth->add_option("-o,--out", synth_dir, "output directory")->required();
  synth->add_option("-n", synth_n, "number of recordings");
  synth->add_option("--classes", synth_classes, "2..4");
  synth->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*features) {
    std::size_t rows = 0;
    if (auto s = ausc_features_write_csv(wav.c_str(), setting.c_str(), csv_out.c_str(), &rows);
        s != AUSC_OK)
      return fail(s);
    std::printf("%zu windows -> %s\n", rows, csv_out.c_str());
    return 0;
  }

  if (*train) {
    ConfigPtr cfg;
    if (auto s = train_flags.build(cfg); s != AUSC_OK) return fail(s);
    ausc_report* raw = nullptr;
    char run_dir[4096] = {0};
    if (auto s = ausc_run_experiment(cfg.get(), &raw, run_dir, sizeof run_dir); s != AUSC_OK)
      return fail(s);
    ReportPtr rep(raw);
    std::fputs(report_text(rep.get(), run_dir).c_str(), stdout);
    std::printf("outputs: %s\n", run_dir);
    return 0;
  }

  if (*evaluate) {
    ConfigPtr cfg;
    if (auto s = eval_flags.build(cfg); s != AUSC_OK) return fail(s);
    ausc_report* raw = nullptr;
    if (auto s = ausc_evaluate(cfg.get(), model_path.c_str(), all_data ? 0 : 1,
                               eval_out.empty() ? nullptr : eval_out.c_str(), &raw);
        s != AUSC_OK)
      return fail(s);
    ReportPtr rep(raw);
    std::fputs(report_text(rep.get(), model_path).c_str(), stdout);
    return 0;
  }

  if (*sweep) {
    ConfigPtr cfg;
    if (auto s = sweep_flags.build(cfg); s != AUSC_OK) return fail(s);
    std::size_t failed = 0;
    char csv_path[4096] = {0};
    if (auto s = ausc_run_sweep(cfg.get(), settings.c_str(), models.c_str(), norms.c_str(),
                                &failed, csv_path, sizeof csv_path);
        s != AUSC_OK)
      return fail(s);
    std::printf("sweep summary: %s (%zu failed)\n", csv_path, failed);
    return 0;
  }

  if (*score) {
    ausc_report* raw = nullptr;
    if (auto s = ausc_score_files(pred_csv.c_str(), truth_csv.c_str(), score_task.c_str(), &raw);
        s != AUSC_OK)
      return fail(s);
    ReportPtr rep(raw);
    std::fputs(report_text(rep.get(), pred_csv).c_str(), stdout);
    std::size_t needed = 0;
    ausc_report_to_json(rep.get(), nullptr, 0, &needed);
    std::string json(needed, '\0');
    ausc_report_to_json(rep.get(), json.data(), json.size(), &needed);
    std::printf("%s\n", json.c_str());
    return 0;
  }

  if (*synth) {
    std::size_t written = 0;
    if (auto s = ausc_synth_write(synth_dir.c_str(), synth_n, synth_classes, synth_seed, &written);
        s != AUSC_OK)
      return fail(s);
    std::printf("%zu recordings -> %s\n", written, synth_dir.c_str());
    return 0;
  }
  return 0;
}
