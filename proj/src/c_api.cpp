// SPDX-License-Identifier: Apache-2.0
#include "auscult/auscult.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "auscult/audio.hpp"
#include "auscult/error.hpp"
#include "auscult/experiment.hpp"
#include "auscult/model_io.hpp"

struct ausc_config {
  auscult::ExperimentConfig cfg;
};

struct ausc_report {
  auscult::metrics::MetricsReport report;
};

struct ausc_model {
  auscult::ModelBundle bundle;
};

namespace {

thread_local std::string g_last_error;

ausc_status status_of(auscult::ErrorCategory c) {
  switch (c) {
    case auscult::ErrorCategory::Validation: return AUSC_ERR_VALIDATION;
    case auscult::ErrorCategory::Data: return AUSC_ERR_DATA;
    case auscult::ErrorCategory::Numeric: return AUSC_ERR_NUMERIC;
  }
  return AUSC_ERR_INTERNAL;
}

template <class F>
ausc_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return AUSC_OK;
  } catch (const auscult::Error& e) {
    g_last_error = e.what();
    return status_of(e.category());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AUSC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AUSC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return AUSC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw auscult::Error(auscult::ErrorCode::InvalidConfig, std::string(what) + " is NULL");
}

// Truncating copy; *needed always gets the full size.
void copy_out(const std::string& s, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || cap == 0) return;
  const std::size_t n = std::min(cap - 1, s.size());
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

std::vector<std::string> split_list(const char* list) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(list ? list : "");
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

extern "C" {

const char* ausc_last_error(void) { return g_last_error.c_str(); }

const char* ausc_version(void) { return "0.1.0"; }

ausc_status ausc_config_create(ausc_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new ausc_config();
  });
}

void ausc_config_destroy(ausc_config* cfg) { delete cfg; }

ausc_status ausc_config_set(ausc_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

ausc_status ausc_config_load_file(ausc_config* cfg, const char* path) {
  return guard([&] {
    require(cfg, "config");
    require(path, "path");
    cfg->cfg.load_file(path);
  });
}

ausc_status ausc_config_validate(const ausc_config* cfg) {
  return guard([&] {
    require(cfg, "config");
    cfg->cfg.validate();
  });
}

ausc_status ausc_config_to_text(const ausc_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guard([&] {
    require(cfg, "config");
    copy_out(cfg->cfg.to_text(), buf, cap, needed);
  });
}

ausc_status ausc_run_experiment(const ausc_config* cfg, ausc_report** out, char* run_dir,
                                size_t cap) {
  return guard([&] {
    require(cfg, "config");
    require(out, "out");
    auto res = auscult::run_experiment(cfg->cfg);
    copy_out(res.run_dir.string(), run_dir, cap, nullptr);
    *out = new ausc_report{std::move(res.report)};
  });
}

ausc_status ausc_run_sweep(const ausc_config* cfg, const char* settings, const char* models,
                           const char* norms, size_t* failed, char* csv_path, size_t cap) {
  return guard([&] {
    require(cfg, "config");
    const auscult::SweepAxes axes{split_list(settings), split_list(models), split_list(norms)};
    const auto rows = auscult::run_sweep(cfg->cfg, axes);
    std::size_t n_failed = 0;
    for (const auto& r : rows) n_failed += r.status == "failed";
    std::error_code ec;
    std::filesystem::create_directories(cfg->cfg.out_dir, ec);
    const auto path = cfg->cfg.out_dir / "sweep.csv";
    const std::string csv = auscult::sweep_to_csv(cfg->cfg, rows);
    auscult::write_binary_file(path, {reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()});
    if (failed) *failed = n_failed;
    copy_out(path.string(), csv_path, cap, nullptr);
  });
}

ausc_status ausc_evaluate(const ausc_config* cfg, const char* model_path, int test_split_only,
                          const char* out_dir, ausc_report** out) {
  return guard([&] {
    require(cfg, "config");
    require(model_path, "model_path");
    require(out, "out");
    auto res = auscult::evaluate_model(model_path, cfg->cfg, test_split_only != 0,
                                       out_dir ? std::filesystem::path(out_dir) : std::filesystem::path());
    *out = new ausc_report{std::move(res.report)};
  });
}

ausc_status ausc_score_files(const char* pred_csv, const char* truth_csv, const char* task,
                             ausc_report** out) {
  return guard([&] {
    require(pred_csv, "pred_csv");
    require(truth_csv, "truth_csv");
    require(task, "task");
    require(out, "out");
    *out = new ausc_report{
        auscult::score_predictions(pred_csv, truth_csv, auscult::metrics::task_from_name(task))};
  });
}

ausc_status ausc_synth_write(const char* dir, size_t n, int classes, uint64_t seed,
                             size_t* written) {
  return guard([&] {
    require(dir, "dir");
    auscult::SynthSpec spec;
    spec.n_sequences = n;
    spec.classes = classes;
    spec.seed = seed;
    const auto count = auscult::write_synthetic_corpus(dir, spec);
    if (written) *written = count;
  });
}

ausc_status ausc_features_write_csv(const char* wav_path, const char* setting,
                                    const char* csv_path, size_t* rows) {
  return guard([&] {
    require(wav_path, "wav_path");
    require(setting, "setting");
    require(csv_path, "csv_path");
    const auto clip = auscult::resample(auscult::read_wav_file(wav_path), auscult::kCanonicalRate);
    const auto& s = auscult::setting_by_id(setting);
    const std::string csv = auscult::window_features_csv(clip, s, {});
    auscult::write_binary_file(csv_path,
                               {reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()});
    if (rows) *rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  });
}

ausc_status ausc_report_get(const ausc_report* r, const char* field, double* value, int* defined) {
  return guard([&] {
    require(r, "report");
    require(field, "field");
    require(value, "value");
    const auto& names = auscult::metrics::report_field_names();
    if (std::find(names.begin(), names.end(), field) == names.end())
      throw auscult::Error(auscult::ErrorCode::InvalidConfig,
                           std::string("unknown report field '") + field + "'");
    const auto v = auscult::metrics::report_field(r->report, field);
    *value = v.value_or(0.0);
    if (defined) *defined = v.has_value() ? 1 : 0;
  });
}

ausc_status ausc_report_to_json(const ausc_report* r, char* buf, size_t cap, size_t* needed) {
  return guard([&] {
    require(r, "report");
    copy_out(auscult::metrics::report_to_json(r->report), buf, cap, needed);
  });
}

ausc_status ausc_report_to_text(const ausc_report* r, const char* label, char* buf, size_t cap,
                                size_t* needed) {
  return guard([&] {
    require(r, "report");
    const std::pair<std::string, auscult::metrics::MetricsReport> row{label ? label : "", r->report};
    copy_out(auscult::metrics::report_table({&row, 1}), buf, cap, needed);
  });
}

void ausc_report_destroy(ausc_report* r) { delete r; }

ausc_status ausc_model_load(const char* path, ausc_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ausc_model{auscult::load_bundle(path)};
  });
}

void ausc_model_destroy(ausc_model* m) { delete m; }

ausc_status ausc_model_info(const ausc_model* m, size_t* n_features, size_t* n_classes) {
  return guard([&] {
    require(m, "model");
    if (n_features) *n_features = m->bundle.model.config.n_features;
    if (n_classes) *n_classes = m->bundle.model.config.n_classes;
  });
}

ausc_status ausc_model_predict(const ausc_model* m, const double* frames, size_t n_frames,
                               size_t n_features, int* label, double* probs) {
  return guard([&] {
    require(m, "model");
    require(frames, "frames");
    require(label, "label");
    const auto& cfg = m->bundle.model.config;
    if (n_features != cfg.n_features)
      throw auscult::Error(auscult::ErrorCode::ShapeMismatch,
                           "model expects " + std::to_string(cfg.n_features) + " features, got " +
                               std::to_string(n_features));
    if (n_frames == 0) throw auscult::Error(auscult::ErrorCode::EmptyInput, "no frames");
    auscult::FrameSequence seq;
    for (std::size_t t = 0; t < n_frames; ++t)
      seq.frames.emplace_back(frames + t * n_features, frames + (t + 1) * n_features);
    auscult::apply_normalization(m->bundle.stats, std::span<auscult::FrameSequence>(&seq, 1));
    const auto p = auscult::rnn::predict(m->bundle.model, seq);
    *label = p.label;
    if (probs) std::copy(p.probs.begin(), p.probs.end(), probs);
  });
}

}  // extern "C"
