// SPDX-License-Identifier: Apache-2.0
#include "auscult/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "auscult/error.hpp"

namespace auscult {

std::string_view norm_method_name(NormMethod m) {
  switch (m) {
    case NormMethod::None: return "none";
    case NormMethod::MinMax: return "minmax";
    case NormMethod::ZScore: return "zscore";
  }
  return "none";
}

NormMethod norm_method_from_name(std::string_view name) {
  std::string key(name);
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "none") return NormMethod::None;
  if (key == "minmax" || key == "min-max") return NormMethod::MinMax;
  if (key == "zscore" || key == "z-score") return NormMethod::ZScore;
  throw Error(ErrorCode::InvalidConfig, "unknown normalization '" + std::string(name) + "'");
}

NormStats fit_normalization(std::span<const std::vector<double>> frames, NormMethod method) {
  if (frames.size() < 2)
    throw Error(ErrorCode::EmptyInput, "need at least 2 frame vectors, got " +
                                           std::to_string(frames.size()));
  const std::size_t d = frames.front().size();
  NormStats st;
  st.method = method;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  st.min.assign(d, std::numeric_limits<double>::infinity());
  st.max.assign(d, -std::numeric_limits<double>::infinity());

  for (const auto& f : frames) {
    if (f.size() != d)
      throw Error(ErrorCode::DimensionMismatch, "frame vectors differ in length");
    for (std::size_t j = 0; j < d; ++j) {
      st.mean[j] += f[j];
      st.min[j] = std::min(st.min[j], f[j]);
      st.max[j] = std::max(st.max[j], f[j]);
    }
  }
  const double n = static_cast<double>(frames.size());
  for (double& m : st.mean) m /= n;
  for (const auto& f : frames)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = f[j] - st.mean[j];
      st.stddev[j] += dev * dev;
    }
  for (double& s : st.stddev) s = std::sqrt(s / n);
  return st;
}

NormStats fit_normalization(std::span<const FrameSequence> sequences, NormMethod method) {
  std::vector<std::vector<double>> all;
  for (const auto& seq : sequences)
    all.insert(all.end(), seq.frames.begin(), seq.frames.end());
  return fit_normalization(std::span<const std::vector<double>>(all), method);
}

void apply_normalization(const NormStats& stats, std::span<std::vector<double>> frames) {
  if (stats.method == NormMethod::None) return;
  const std::size_t d = stats.n_features();
  for (auto& f : frames) {
    if (f.size() != d)
      throw Error(ErrorCode::DimensionMismatch,
                  "frame has " + std::to_string(f.size()) + " features, stats fitted on " +
                      std::to_string(d));
    for (std::size_t j = 0; j < d; ++j) {
      if (stats.max[j] == stats.min[j]) {
        f[j] = 0.0;
        continue;
      }
      if (stats.method == NormMethod::ZScore)
        f[j] = (f[j] - stats.mean[j]) / std::max(stats.stddev[j], kNormEpsilon);
      else
        f[j] = (f[j] - stats.min[j]) / std::max(stats.max[j] - stats.min[j], kNormEpsilon);
    }
  }
}

void apply_normalization(const NormStats& stats, std::span<FrameSequence> sequences) {
  for (auto& seq : sequences) apply_normalization(stats, std::span(seq.frames));
}

}  // namespace auscult
