// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "auscult/frames.hpp"

namespace auscult {

enum class NormMethod { None, MinMax, ZScore };

std::string_view norm_method_name(NormMethod m);
/// Accepts "none", "minmax", "zscore" (case-insensitive).
NormMethod norm_method_from_name(std::string_view name);

/// Per-feature statistics of the training frames.
struct NormStats {
  NormMethod method = NormMethod::None;
  std::vector<double> mean;
  std::vector<double> stddev;  // population (divisor N)
  std::vector<double> min;
  std::vector<double> max;

  std::size_t n_features() const { return mean.size(); }
  bool operator==(const NormStats&) const = default;
};

inline constexpr double kNormEpsilon = 1e-12;

NormStats fit_normalization(std::span<const std::vector<double>> frames, NormMethod method);
NormStats fit_normalization(std::span<const FrameSequence> sequences, NormMethod method);

/// Z-score: (x - mean) / max(std, eps). Min-max: (x - min) / max(max - min, eps).
/// Values outside the fitted range are not clipped.
void apply_normalization(const NormStats& stats, std::span<std::vector<double>> frames);
void apply_normalization(const NormStats& stats, std::span<FrameSequence> sequences);

}  // namespace auscult
