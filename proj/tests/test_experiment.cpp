// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "auscult/error.hpp"
#include "auscult/experiment.hpp"
#include "auscult/model_io.hpp"

using namespace auscult;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("auscult_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig smoke_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.synthetic = true;
  cfg.synth.n_sequences = 40;
  cfg.model.hidden = 8;
  cfg.train.epochs = 3;
  cfg.train.seed = 11;
  cfg.out_dir = out;
  return cfg;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config text parsing and overrides") {
  ExperimentConfig cfg;
  cfg.parse_text(
      "# comment\n"
      "task = anomaly4\n"
      "setting = S5   # trailing comment\n"
      "norm = minmax\n"
      "model = BiGRU\n"
      "epochs = 7\n"
      "hidden = 32\n"
      "split = patient\n"
      "split_seed = 99\n");
  CHECK(cfg.task == metrics::Task::Anomaly4);
  CHECK(cfg.setting == "S5");
  CHECK(cfg.normalization == NormMethod::MinMax);
  CHECK(cfg.model.cell == rnn::CellType::GRU);
  CHECK(cfg.model.bidirectional);
  CHECK(cfg.train.epochs == 7);
  CHECK(cfg.model.hidden == 32);
  CHECK(cfg.split_mode == SplitMode::Patient);
  CHECK(cfg.effective_split_seed() == 99);
  cfg.set("seed", "4");
  CHECK(cfg.run_name() == "Anomaly4_BiGRU_S5_minmax_4");

  ExperimentConfig again;
  again.parse_text(cfg.to_text());
  CHECK(again.to_text() == cfg.to_text());

  CHECK_THROWS_AS(cfg.set("colour", "blue"), Error);
  CHECK_THROWS_AS(cfg.set("epochs", "many"), Error);
  CHECK_THROWS_AS(cfg.parse_text("no equals sign"), Error);
}

TEST_CASE("validation") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), Error);  // no data and not synthetic
  cfg.synthetic = true;
  CHECK_NOTHROW(cfg.validate());
  cfg.split_ratio = 1.0;
  try {
    cfg.validate();
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
    CHECK(e.category() == ErrorCategory::Validation);
  }
}

TEST_CASE("task labels") {
  using metrics::Task;
  CHECK(task_label(Task::Anomaly2, Anomaly::Wheezes, Diagnosis::Healthy) == 1);
  CHECK(task_label(Task::Anomaly4, Anomaly::Both, Diagnosis::Healthy) == 3);
  CHECK(task_label(Task::Patho3, Anomaly::Normal, Diagnosis::LRTI) == 2);
  CHECK(task_label(Task::Patho2, Anomaly::Normal, Diagnosis::Asthma) == 1);
}

TEST_CASE("smoke run writes every artifact and reports are recomputable") {
  const auto out = scratch("smoke");
  const auto res = run_experiment(smoke_config(out));
  for (const char* f : {"report.json", "confusion.csv", "history.csv", "model.bin", "stats.bin",
                        "predictions.csv", "truth.csv", "config.txt"})
    CHECK(fs::exists(res.run_dir / f));
  CHECK(res.history.size() == 3);
  CHECK(res.n_train + res.n_test == 40);

  const auto cm = metrics::confusion_from_csv(slurp(res.run_dir / "confusion.csv"));
  const auto again = metrics::report(cm, metrics::Task::Anomaly2);
  const auto stored = metrics::report_from_json(slurp(res.run_dir / "report.json"));
  for (const auto& name : metrics::report_field_names())
    CHECK(metrics::report_field(again, name) == metrics::report_field(stored, name));

  const auto scored = score_predictions(res.run_dir / "predictions.csv",
                                        res.run_dir / "truth.csv", metrics::Task::Anomaly2);
  CHECK(scored.confusion == cm);
}

TEST_CASE("saved model reproduces test predictions") {
  const auto out = scratch("reproduce");
  const auto cfg = smoke_config(out);
  const auto res = run_experiment(cfg);
  const auto eval = evaluate_model(res.run_dir / "model.bin", cfg, true, out / "eval");
  CHECK(eval.report.confusion == res.report.confusion);
  CHECK(slurp(out / "eval" / "predictions.csv") == slurp(res.run_dir / "predictions.csv"));
}

TEST_CASE("identical config and seed give identical artifacts") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run_experiment(smoke_config(a));
  const auto rb = run_experiment(smoke_config(b));
  CHECK(slurp(ra.run_dir / "report.json") == slurp(rb.run_dir / "report.json"));
  CHECK(read_binary_file(ra.run_dir / "model.bin") == read_binary_file(rb.run_dir / "model.bin"));
}

TEST_CASE("sweep rows, resume and failure isolation") {
  const auto out = scratch("sweep");
  auto cfg = smoke_config(out);
  cfg.train.epochs = 1;
  const SweepAxes axes{{"S3", "S4"}, {"LSTM", "GRU"}, {"zscore"}};
  const auto rows = run_sweep(cfg, axes);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.status == "ok");
  const auto again = run_sweep(cfg, axes);
  for (const auto& r : again) CHECK(r.status == "resumed");
  CHECK(sweep_to_csv(cfg, rows) != "");
  std::size_t lines = 0;
  for (char c : sweep_to_csv(cfg, rows)) lines += c == '\n';
  CHECK(lines == 5);

  CHECK_THROWS_AS(run_sweep(cfg, SweepAxes{{}, {"LSTM"}, {"zscore"}}), Error);

  auto tiny = cfg;
  tiny.synth.min_duration_s = 0.2;
  tiny.synth.max_duration_s = 0.3;
  tiny.out_dir = out / "fail";
  const auto failed = run_sweep(tiny, SweepAxes{{"S1"}, {"LSTM"}, {"zscore"}});
  REQUIRE(failed.size() == 1);
  CHECK(failed[0].status == "failed");
  CHECK(failed[0].error.find("EmptyDataset") != std::string::npos);
}

TEST_CASE("offline scoring") {
  const std::string truth = "id,label\na,0\nb,1\nc,1\n";
  auto r = score_prediction_text(truth, truth, metrics::Task::Anomaly2);
  for (const auto& name : metrics::report_field_names())
    CHECK(metrics::report_field(r, name) == 1.0);
  r = score_prediction_text("c,crackles_or_wheezes\na,normal\nb,0\n", truth, metrics::Task::Anomaly2);
  CHECK(r.confusion.at(1, 0) == 1);
  try {
    score_prediction_text("x,0\ny,1\nz,1\n", truth, metrics::Task::Anomaly2);
    FAIL("expected IdMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IdMismatch);
  }
  try {
    score_prediction_text("a,0\nb,7\nc,1\n", truth, metrics::Task::Anomaly2);
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownLabel);
  }
}

TEST_CASE("synthetic corpus on disk loads like a real one") {
  const auto dir = scratch("corpus");
  SynthSpec spec;
  spec.n_sequences = 12;
  spec.classes = 4;
  CHECK(write_synthetic_corpus(dir, spec) == 12);
  ExperimentConfig cfg;
  cfg.data_dir = dir;
  cfg.diagnosis_file = dir / "diagnosis.txt";
  cfg.task = metrics::Task::Anomaly4;
  const auto data = prepare_sequences(cfg);
  REQUIRE(data.sequences.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(data.sequences[i].label == static_cast<int>(i % 4));

  cfg.task = metrics::Task::Patho3;
  cfg.pathology_unit = PathologyUnit::Recording;
  const auto rec = prepare_sequences(cfg);
  CHECK(rec.sequences.size() == 12);
  CHECK(rec.sequences[1].label == 1);  // COPD
  CHECK(rec.sequences[2].label == 2);  // URTI
}

TEST_CASE("stage names prefix propagated errors") {
  ExperimentConfig cfg;
  const auto dir = scratch("bad_corpus");
  std::ofstream(dir / "diagnosis.txt") << "101,Flu\n";
  cfg.data_dir = dir;
  cfg.diagnosis_file = dir / "diagnosis.txt";
  try {
    prepare_sequences(cfg);
    FAIL("expected UnknownDiagnosis");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownDiagnosis);
    CHECK(std::string(e.what()).find("ingest stage") != std::string::npos);
  }
}

TEST_CASE("feature and frame dumps") {
  AudioClip clip{std::vector<double>(2000, 0.0), 4000};
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = std::sin(0.3 * i);
  const auto csv = window_features_csv(clip, setting_by_id("S4"), {});
  std::size_t rows = 0, commas = 0;
  for (char c : csv) {
    rows += c == '\n';
    commas += c == ',';
  }
  CHECK(rows == 10);
  CHECK(commas == 10 * 12);

  FrameSequence seq = compose_frames(clip, setting_by_id("S4"), {});
  seq.id = "x#0";
  const auto frames = frames_csv(std::span<const FrameSequence>(&seq, 1));
  CHECK(frames.rfind("x#0,0,", 0) == 0);
}

TEST_CASE("model files") {
  rnn::ModelConfig mc;
  mc.hidden = 3;
  mc.n_features = 13;
  ModelBundle b{rnn::initialize_model(mc, 1), {}, "S3", "Anomaly2", ""};
  b.stats.method = NormMethod::ZScore;
  b.stats.mean = b.stats.stddev = b.stats.min = b.stats.max = std::vector<double>(13, 0.5);
  const auto bytes = encode_bundle(b);
  const auto back = decode_bundle(bytes);
  CHECK(back.model == b.model);
  CHECK(back.stats == b.stats);
  CHECK(back.setting_id == "S3");
  CHECK(encode_bundle(back) == bytes);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "AUSCMDL1");

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_bundle(truncated), Error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_bundle(bad_magic), Error);

  CHECK(decode_norm_stats(encode_norm_stats(b.stats)) == b.stats);
}

}  // TEST_SUITE
