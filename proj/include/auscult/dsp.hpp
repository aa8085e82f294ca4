// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace auscult::dsp {

struct MfccConfig {
  std::size_t n_coeffs = 13;
  std::size_t n_filters = 26;
  std::size_t fft_size = 0;  // 0: next power of two >= window length
  double fmin = 50.0;
  double fmax = 2000.0;  // capped at rate / 2
  double log_floor = 1e-10;
};

std::size_t next_pow2(std::size_t n);

/// Symmetric Hamming window, w[0] == w[n-1]. n == 1 gives {1}.
std::vector<double> hamming_window(std::size_t n);

/// In-place iterative radix-2 FFT. data.size() must be a power of two.
void fft(std::span<std::complex<double>> data);

/// |DFT| of `signal` zero-padded to fft_size, bins 0..fft_size/2. No window.
std::vector<double> fft_magnitude(std::span<const double> signal, std::size_t fft_size);

/// Hamming-windowed magnitude spectrum, fft_size/2 + 1 bins.
std::vector<double> magnitude_spectrum(std::span<const double> window,
                                       const MfccConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters over FFT bins, row-major n_filters x (fft_size/2 + 1).
class MelFilterbank {
public:
  MelFilterbank(const MfccConfig& cfg, int sample_rate, std::size_t fft_size);

  std::size_t n_filters() const { return n_filters_; }
  std::size_t n_bins() const { return n_bins_; }
  double weight(std::size_t filter, std::size_t bin) const {
    return weights_[filter * n_bins_ + bin];
  }
  /// Breakpoint frequencies in Hz (n_filters + 2 of them, mel-equispaced).
  const std::vector<double>& breakpoints_hz() const { return breakpoints_hz_; }
  /// FFT bin index each breakpoint maps to.
  const std::vector<std::size_t>& breakpoint_bins() const { return breakpoint_bins_; }

  std::vector<double> apply(std::span<const double> magnitudes) const;

private:
  std::size_t n_filters_;
  std::size_t n_bins_;
  std::vector<double> weights_;
  std::vector<double> breakpoints_hz_;
  std::vector<std::size_t> breakpoint_bins_;
};

/// Orthonormal DCT-II, first n_out coefficients.
std::vector<double> dct2(std::span<const double> v, std::size_t n_out);
/// Inverse of the full orthonormal DCT-II (i.e. the orthonormal DCT-III).
std::vector<double> idct2(std::span<const double> coeffs);

/// Caches the filterbank for one (rate, window length) pair.
class MfccExtractor {
public:
  MfccExtractor(const MfccConfig& cfg, int sample_rate, std::size_t window_length);

  std::vector<double> operator()(std::span<const double> window) const;

  std::size_t window_length() const { return window_length_; }
  std::size_t fft_size() const { return fft_size_; }
  const MelFilterbank& filterbank() const { return filterbank_; }

private:
  MfccConfig cfg_;
  std::size_t window_length_;
  std::size_t fft_size_;
  MelFilterbank filterbank_;
};

/// One coefficient vector for the whole window (single analysis frame).
std::vector<double> mfcc(std::span<const double> window, int sample_rate,
                         const MfccConfig& cfg);

}  // namespace auscult::dsp
