// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace auscult {

/// Mono signal, amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

/// All clips are brought to this rate before feature extraction.
inline constexpr int kCanonicalRate = 4000;

/// Decodes a RIFF/WAVE container (PCM 8/16/24/32-bit or IEEE float 32/64-bit).
/// Multi-channel audio is mean-downmixed.
AudioClip parse_wav(std::span<const std::uint8_t> bytes);
AudioClip read_wav_file(const std::filesystem::path& path);

/// Encodes as mono PCM16. Samples are clamped to [-1, 1).
std::vector<std::uint8_t> write_wav_pcm16(const AudioClip& clip);
void write_wav_file(const std::filesystem::path& path, const AudioClip& clip);

/// Windowed-sinc low-pass (cutoff 0.45 * target_rate) when downsampling,
/// then linear interpolation onto the target grid. Same rate is a copy.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace auscult
