// SPDX-License-Identifier: Apache-2.0
#include "auscult/frames.hpp"

#include <cmath>

#include "auscult/error.hpp"

namespace auscult {

const std::vector<FrameSetting>& builtin_settings() {
  static const std::vector<FrameSetting> settings = {
      {"S1", 500, 500, 1, 500, 13},  {"S2", 500, 250, 1, 500, 13},
      {"S3", 250, 250, 1, 250, 13},  {"S4", 50, 50, 5, 250, 65},
      {"S5", 50, 25, 5, 150, 65},    {"S6", 50, 50, 10, 500, 130},
      {"S7", 50, 25, 10, 275, 130},
  };
  return settings;
}

const FrameSetting& setting_by_id(std::string_view id) {
  for (const auto& s : builtin_settings())
    if (s.id == id) return s;
  throw Error(ErrorCode::InvalidConfig, "unknown frame setting '" + std::string(id) + "'");
}

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::floor(ms * sample_rate / 1000.0 + 0.5));
}

std::size_t window_count_samples(std::size_t n_samples, std::size_t window,
                                 std::size_t step) {
  if (window == 0 || step == 0)
    throw Error(ErrorCode::InvalidConfig, "window and step must be positive");
  if (n_samples < window)
    throw Error(ErrorCode::CycleTooShort,
                std::to_string(n_samples) + " samples < window of " + std::to_string(window));
  return (n_samples - window) / step + 1;
}

std::size_t window_count(double duration_ms, const FrameSetting& s) {
  if (duration_ms < s.window_ms)
    throw Error(ErrorCode::CycleTooShort,
                std::to_string(duration_ms) + " ms < window of " +
                    std::to_string(s.window_ms) + " ms");
  return static_cast<std::size_t>(std::floor((duration_ms - s.window_ms) / s.step_ms)) + 1;
}

std::vector<std::vector<double>> window_features(const AudioClip& clip,
                                                 const FrameSetting& s,
                                                 const dsp::MfccConfig& cfg) {
  const std::size_t window = ms_to_samples(s.window_ms, clip.sample_rate);
  const std::size_t step = ms_to_samples(s.step_ms, clip.sample_rate);
  const std::size_t n_windows = window_count_samples(clip.samples.size(), window, step);
  const dsp::MfccExtractor extract(cfg, clip.sample_rate, window);

  std::vector<std::vector<double>> out;
  out.reserve(n_windows);
  const std::span<const double> samples(clip.samples);
  for (std::size_t w = 0; w < n_windows; ++w)
    out.push_back(extract(samples.subspan(w * step, window)));
  return out;
}

FrameSequence compose_frames(const AudioClip& clip, const FrameSetting& s,
                             const dsp::MfccConfig& cfg) {
  if (s.group == 0) throw Error(ErrorCode::InvalidConfig, "group must be positive");
  const auto windows = window_features(clip, s, cfg);
  const std::size_t n_frames = windows.size() / s.group;
  if (n_frames == 0)
    throw Error(ErrorCode::EmptyAfterGrouping,
                std::to_string(windows.size()) + " windows < group of " +
                    std::to_string(s.group));

  FrameSequence seq;
  seq.frames.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::vector<double> frame;
    frame.reserve(s.group * cfg.n_coeffs);
    for (std::size_t b = 0; b < s.group; ++b) {
      const auto& coeffs = windows[f * s.group + b];
      frame.insert(frame.end(), coeffs.begin(), coeffs.end());
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace auscult
