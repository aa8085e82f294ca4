// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "auscult/dsp.hpp"
#include "auscult/error.hpp"
#include "oracles.hpp"

using namespace auscult;
using namespace auscult::dsp;

namespace {

std::vector<double> random_signal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("hamming closed forms") {
  const auto w3 = hamming_window(3);
  CHECK(w3[0] == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(w3[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w3[2] == w3[0]);
  CHECK(hamming_window(1) == std::vector<double>{1.0});
  const auto w64 = hamming_window(64);
  const auto ref = oracle::hamming(64);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(w64[i] == w64[63 - i]);
    CHECK(std::abs(w64[i] - ref[i]) < 1e-15);
    CHECK(w64[i] <= 1.0);
  }
  CHECK(w64[31] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(hamming_window(0), Error);
}

TEST_CASE("fft matches the naive dft") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {2u, 8u, 64u, 256u}) {
    const auto x = random_signal(n, rng);
    const auto got = fft_magnitude(x, n);
    const auto ref = oracle::naive_dft_magnitude(x, n);
    REQUIRE(got.size() == n / 2 + 1);
    for (std::size_t k = 0; k < got.size(); ++k)
      CHECK(std::abs(got[k] - ref[k]) <= 1e-10 * oracle::max_abs(ref));
  }
}

TEST_CASE("impulse has a flat spectrum") {
  std::vector<double> d(64, 0.0);
  d[0] = 1.0;
  for (double m : fft_magnitude(d, 64)) CHECK(m == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("zero window gives a zero spectrum") {
  MfccConfig cfg;
  cfg.fft_size = 256;
  for (double m : magnitude_spectrum(std::vector<double>(200, 0.0), cfg)) CHECK(m == 0.0);
}

TEST_CASE("magnitude spectrum is scale-equivariant") {
  std::mt19937_64 rng(2);
  MfccConfig cfg;
  cfg.fft_size = 256;
  const auto x = random_signal(200, rng);
  auto y = x;
  for (auto& v : y) v *= 3.5;
  const auto a = magnitude_spectrum(x, cfg), b = magnitude_spectrum(y, cfg);
  for (std::size_t k = 0; k < a.size(); ++k)
    CHECK(std::abs(b[k] - 3.5 * a[k]) <= 1e-12 * (1 + b[k]));
}

TEST_CASE("parseval on unwindowed transforms") {
  std::mt19937_64 rng(3);
  const std::size_t n = 128;
  const auto x = random_signal(n, rng);
  std::vector<std::complex<double>> c(x.begin(), x.end());
  fft(c);
  double lhs = 0, rhs = 0;
  for (const auto& v : c) lhs += std::norm(v);
  for (double v : x) rhs += v * v;
  CHECK(lhs == doctest::Approx(n * rhs).epsilon(1e-6));
}

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-14));
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-5));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 8000.0);
  for (int i = 0; i < 100; ++i) {
    const double f = u(rng);
    CHECK(std::abs(mel_to_hz(hz_to_mel(f)) - f) <= 1e-9);
  }
}

TEST_CASE("filterbank construction") {
  MfccConfig cfg;
  const MelFilterbank fb(cfg, 4000, 256);
  const auto& bp = fb.breakpoints_hz();
  REQUIRE(bp.size() == 28);
  const double gap = hz_to_mel(bp[1]) - hz_to_mel(bp[0]);
  for (std::size_t j = 1; j + 1 < bp.size(); ++j)
    CHECK(std::abs((hz_to_mel(bp[j + 1]) - hz_to_mel(bp[j])) - gap) <= 1e-9);

  const double bin_hz = 4000.0 / 256;
  const double lo = oracle::mel(50.0), hi = oracle::mel(2000.0);
  for (std::size_t m = 0; m < fb.n_filters(); ++m) {
    double sum = 0, peak = 0;
    std::size_t peak_bin = 0;
    for (std::size_t k = 0; k < fb.n_bins(); ++k) {
      CHECK(fb.weight(m, k) >= 0.0);
      sum += fb.weight(m, k);
      if (fb.weight(m, k) > peak) {
        peak = fb.weight(m, k);
        peak_bin = k;
      }
    }
    CHECK(sum > 0.0);
    CHECK(peak == 1.0);
    const double center = oracle::mel_inv(lo + (hi - lo) * (m + 1.0) / 27.0);
    CHECK(std::abs(peak_bin * bin_hz - center) <= bin_hz / 2 + 1e-9);
  }
}

TEST_CASE("too small an fft yields degenerate filters") {
  MfccConfig cfg;
  try {
    MelFilterbank fb(cfg, 4000, 16);
    FAIL("expected DegenerateFilter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateFilter);
  }
}

TEST_CASE("dct2") {
  const auto c = dct2(std::vector<double>(5, 2.0), 5);
  CHECK(c[0] == doctest::Approx(2.0 * std::sqrt(5.0)).epsilon(1e-14));
  for (std::size_t k = 1; k < 5; ++k) CHECK(std::abs(c[k]) <= 1e-12);

  const auto y = dct2(std::vector<double>{1.0, -1.0}, 2);
  const auto ref = oracle::dct({1.0, -1.0}, 2);
  CHECK(std::abs(y[0]) <= 1e-15);
  CHECK(y[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(y[1] - ref[1]) <= 1e-14);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_signal(26, rng);
    const auto full = dct2(v, 26);
    CHECK(oracle::norm2(full) == doctest::Approx(oracle::norm2(v)).epsilon(1e-9));
    const auto back = idct2(full);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back[i] - v[i]) <= 1e-9);
    const auto r = oracle::dct(v, 13);
    const auto p = dct2(v, 13);
    for (std::size_t k = 0; k < 13; ++k) CHECK(std::abs(p[k] - r[k]) <= 1e-12);
  }
}

TEST_CASE("mfcc of silence is the dct of a constant log floor") {
  const auto c = mfcc(std::vector<double>(200, 0.0), 4000, {});
  REQUIRE(c.size() == 13);
  CHECK(c[0] == doctest::Approx(std::log(1e-10) * std::sqrt(26.0)).epsilon(1e-12));
  for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(c[k]) <= 1e-9);
}

TEST_CASE("mfcc matches the straight-line oracle") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = trial % 2 ? 200 : 1000;
    const auto x = random_signal(n, rng);
    const auto got = mfcc(x, 4000, {});
    const auto ref = oracle::mfcc(x, 4000);
    double diff = 0;
    for (std::size_t k = 0; k < 13; ++k) diff += (got[k] - ref[k]) * (got[k] - ref[k]);
    CHECK(std::sqrt(diff) / oracle::norm2(ref) <= 1e-6);
  }
}

TEST_CASE("mfcc is deterministic") {
  std::mt19937_64 rng(7);
  const auto x = random_signal(500, rng);
  CHECK(mfcc(x, 4000, {}) == mfcc(x, 4000, {}));
}

TEST_CASE("config validation") {
  MfccConfig cfg;
  cfg.n_coeffs = 30;
  CHECK_THROWS_AS(MfccExtractor(cfg, 4000, 200), Error);
  cfg = {};
  cfg.fmin = 2500;
  CHECK_THROWS_AS(MfccExtractor(cfg, 4000, 200), Error);
}

}  // TEST_SUITE
