// SPDX-License-Identifier: Apache-2.0
#include "auscult/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "auscult/error.hpp"

namespace auscult::dsp {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t resolve_fft_size(const MfccConfig& cfg, std::size_t window_length) {
  std::size_t n = cfg.fft_size == 0 ? next_pow2(window_length) : cfg.fft_size;
  if (!is_pow2(n))
    throw Error(ErrorCode::InvalidConfig, "fft_size must be a power of two");
  if (n < window_length)
    throw Error(ErrorCode::InvalidConfig,
                "fft_size " + std::to_string(n) + " shorter than window " +
                    std::to_string(window_length));
  return n;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> hamming_window(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "window length must be >= 1");
  if (n == 1) return {1.0};
  std::vector<double> w(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / denom);
  // exact symmetry; cos() of 2*pi*i/(n-1) and its mirror differ in the last ulp
  for (std::size_t i = 0; i < n / 2; ++i) w[n - 1 - i] = w[i];
  return w;
}

void fft(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (!is_pow2(n)) throw Error(ErrorCode::InvalidConfig, "FFT size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // twiddles computed directly rather than by recurrence to avoid drift
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / len;
      const std::complex<double> w(std::cos(angle), std::sin(angle));
      for (std::size_t start = 0; start < n; start += len) {
        auto& a = data[start + k];
        auto& b = data[start + k + half];
        const std::complex<double> t = w * b;
        b = a - t;
        a += t;
      }
    }
  }
}

std::vector<double> fft_magnitude(std::span<const double> signal, std::size_t fft_size) {
  if (signal.size() > fft_size)
    throw Error(ErrorCode::InvalidConfig, "signal longer than fft_size");
  std::vector<std::complex<double>> buf(fft_size);
  std::copy(signal.begin(), signal.end(), buf.begin());
  fft(buf);
  std::vector<double> mag(fft_size / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

std::vector<double> magnitude_spectrum(std::span<const double> window,
                                       const MfccConfig& cfg) {
  const std::size_t n_fft = resolve_fft_size(cfg, window.size());
  std::vector<double> weighted(window.begin(), window.end());
  if (!weighted.empty()) {
    const auto w = hamming_window(weighted.size());
    for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] *= w[i];
  }
  return fft_magnitude(weighted, n_fft);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(const MfccConfig& cfg, int sample_rate, std::size_t fft_size)
    : n_filters_(cfg.n_filters), n_bins_(fft_size / 2 + 1) {
  if (sample_rate <= 0 || !is_pow2(fft_size) || n_filters_ == 0)
    throw Error(ErrorCode::InvalidConfig, "filterbank needs rate > 0, pow2 fft, filters > 0");
  const double nyquist = sample_rate / 2.0;
  const double fmax = std::min(cfg.fmax, nyquist);
  if (cfg.fmin < 0.0 || cfg.fmin >= fmax)
    throw Error(ErrorCode::InvalidConfig, "need 0 <= fmin < fmax <= rate/2");

  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(fmax);
  const std::size_t n_points = n_filters_ + 2;
  breakpoints_hz_.resize(n_points);
  breakpoint_bins_.resize(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    const double mel = mel_lo + (mel_hi - mel_lo) * j / static_cast<double>(n_points - 1);
    breakpoints_hz_[j] = mel_to_hz(mel);
    breakpoint_bins_[j] = static_cast<std::size_t>(
        std::floor(breakpoints_hz_[j] * fft_size / sample_rate + 0.5));
  }
  for (std::size_t j = 0; j + 1 < n_points; ++j)
    if (breakpoint_bins_[j] == breakpoint_bins_[j + 1])
      throw Error(ErrorCode::DegenerateFilter,
                  "breakpoints " + std::to_string(j) + " and " + std::to_string(j + 1) +
                      " share FFT bin " + std::to_string(breakpoint_bins_[j]) +
                      " (fft_size " + std::to_string(fft_size) + ")");

  weights_.assign(n_filters_ * n_bins_, 0.0);
  for (std::size_t m = 0; m < n_filters_; ++m) {
    const std::size_t left = breakpoint_bins_[m];
    const std::size_t center = breakpoint_bins_[m + 1];
    const std::size_t right = std::min(breakpoint_bins_[m + 2], n_bins_ - 1);
    double* row = weights_.data() + m * n_bins_;
    for (std::size_t k = left + 1; k <= center; ++k)
      row[k] = static_cast<double>(k - left) / static_cast<double>(center - left);
    for (std::size_t k = center + 1; k < right; ++k)
      row[k] = static_cast<double>(right - k) / static_cast<double>(right - center);
  }
}

std::vector<double> MelFilterbank::apply(std::span<const double> magnitudes) const {
  if (magnitudes.size() != n_bins_)
    throw Error(ErrorCode::DimensionMismatch, "spectrum length does not match filterbank");
  std::vector<double> energies(n_filters_, 0.0);
  for (std::size_t m = 0; m < n_filters_; ++m) {
    const double* row = weights_.data() + m * n_bins_;
    double acc = 0.0;
    for (std::size_t k = 0; k < n_bins_; ++k) acc += row[k] * magnitudes[k];
    energies[m] = acc;
  }
  return energies;
}

std::vector<double> dct2(std::span<const double> v, std::size_t n_out) {
  const std::size_t n = v.size();
  if (n == 0 || n_out > n)
    throw Error(ErrorCode::InvalidConfig, "dct2 needs 0 < n_out <= length");
  std::vector<double> y(n_out);
  const double s0 = std::sqrt(1.0 / n);
  const double sk = std::sqrt(2.0 / n);
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += v[i] * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    y[k] = (k == 0 ? s0 : sk) * acc;
  }
  return y;
}

std::vector<double> idct2(std::span<const double> coeffs) {
  const std::size_t n = coeffs.size();
  std::vector<double> v(n, 0.0);
  const double s0 = std::sqrt(1.0 / n);
  const double sk = std::sqrt(2.0 / n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      acc += (k == 0 ? s0 : sk) * coeffs[k] *
             std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    v[i] = acc;
  }
  return v;
}

MfccExtractor::MfccExtractor(const MfccConfig& cfg, int sample_rate,
                             std::size_t window_length)
    : cfg_(cfg),
      window_length_(window_length),
      fft_size_(resolve_fft_size(cfg, window_length)),
      filterbank_(cfg, sample_rate, fft_size_) {
  if (window_length == 0) throw Error(ErrorCode::InvalidConfig, "empty window");
  if (cfg.n_coeffs == 0 || cfg.n_coeffs > cfg.n_filters)
    throw Error(ErrorCode::InvalidConfig, "need 0 < n_coeffs <= n_filters");
  if (!(cfg.log_floor > 0.0))
    throw Error(ErrorCode::InvalidConfig, "log_floor must be positive");
  cfg_.fft_size = fft_size_;
}

std::vector<double> MfccExtractor::operator()(std::span<const double> window) const {
  if (window.size() != window_length_)
    throw Error(ErrorCode::DimensionMismatch,
                "window of " + std::to_string(window.size()) + " samples, extractor built for " +
                    std::to_string(window_length_));
  auto energies = filterbank_.apply(magnitude_spectrum(window, cfg_));
  for (double& e : energies) e = std::log(std::max(e, cfg_.log_floor));
  return dct2(energies, cfg_.n_coeffs);
}

std::vector<double> mfcc(std::span<const double> window, int sample_rate,
                         const MfccConfig& cfg) {
  return MfccExtractor(cfg, sample_rate, window.size())(window);
}

}  // namespace auscult::dsp
