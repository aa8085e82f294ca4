// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/dsp.hpp"

namespace auscult {

/// One window/step/grouping configuration for building RNN input frames.
struct FrameSetting {
  std::string id;
  double window_ms = 0.0;
  double step_ms = 0.0;
  std::size_t group = 1;    // windows concatenated per frame
  double frame_ms = 0.0;    // window_ms + (group - 1) * step_ms
  std::size_t n_features = 0;

  bool operator==(const FrameSetting&) const = default;
};

inline constexpr std::size_t kCoeffsPerWindow = 13;

/// S1..S7.
const std::vector<FrameSetting>& builtin_settings();
/// Throws InvalidConfig for ids outside S1..S7.
const FrameSetting& setting_by_id(std::string_view id);

/// Round-half-up conversion at the given rate (50 ms @ 4 kHz -> 200).
std::size_t ms_to_samples(double ms, int sample_rate);

/// floor((duration - window) / step) + 1; CycleTooShort below one window.
std::size_t window_count(double duration_ms, const FrameSetting& s);
std::size_t window_count_samples(std::size_t n_samples, std::size_t window, std::size_t step);

struct FrameSequence {
  std::vector<std::vector<double>> frames;
  int label = 0;
  std::string id;
  std::string patient_id;

  std::size_t length() const { return frames.size(); }
  std::size_t n_features() const { return frames.empty() ? 0 : frames.front().size(); }
};

/// Per-window MFCC vectors in time order (n_windows x 13).
std::vector<std::vector<double>> window_features(const AudioClip& clip,
                                                 const FrameSetting& s,
                                                 const dsp::MfccConfig& cfg);

/// Windows the clip, extracts one MFCC vector per window, and concatenates
/// consecutive disjoint groups of `s.group` windows into frames. Trailing
/// windows that do not fill a group are dropped.
FrameSequence compose_frames(const AudioClip& clip, const FrameSetting& s,
                             const dsp::MfccConfig& cfg);

}  // namespace auscult
