// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "auscult/audio.hpp"
#include "auscult/dataset.hpp"
#include "auscult/error.hpp"

using namespace auscult;

namespace {

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                    std::uint16_t bits, const std::vector<std::uint8_t>& data,
                                    std::uint32_t declared_data = 0xffffffff) {
  std::vector<std::uint8_t> b;
  const std::uint32_t data_len = declared_data == 0xffffffff ? data.size() : declared_data;
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + data_len);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, format);
  put16(b, channels);
  put32(b, rate);
  put32(b, rate * channels * bits / 8);
  put16(b, channels * bits / 8);
  put16(b, bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, data_len);
  b.insert(b.end(), data.begin(), data.end());
  return b;
}

std::vector<std::uint8_t> pcm16(std::initializer_list<std::int16_t> v) {
  std::vector<std::uint8_t> b;
  for (auto s : v) put16(b, static_cast<std::uint16_t>(s));
  return b;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("pcm16 mono header and scaling") {
  const auto clip = parse_wav(wav_bytes(1, 1, 8000, 16, pcm16({0, 32767})));
  CHECK(clip.sample_rate == 8000);
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.samples[0] == 0.0);
  CHECK(clip.samples[1] == 32767.0 / 32768.0);
}

TEST_CASE("stereo is mean-downmixed") {
  const auto clip = parse_wav(wav_bytes(1, 2, 4000, 16, pcm16({1000, 3000})));
  REQUIRE(clip.samples.size() == 1);
  CHECK(clip.samples[0] == doctest::Approx(2000.0 / 32768.0).epsilon(1e-15));
}

TEST_CASE("other encodings") {
  SUBCASE("unsigned 8-bit") {
    const auto clip = parse_wav(wav_bytes(1, 1, 4000, 8, {128, 0, 255}));
    CHECK(clip.samples[0] == 0.0);
    CHECK(clip.samples[1] == -1.0);
    CHECK(clip.samples[2] == doctest::Approx(127.0 / 128.0));
  }
  SUBCASE("32-bit integer") {
    std::vector<std::uint8_t> d;
    put32(d, 0x40000000u);
    CHECK(parse_wav(wav_bytes(1, 1, 4000, 32, d)).samples[0] == 0.5);
  }
  SUBCASE("float32") {
    std::vector<std::uint8_t> d(4);
    const float v = -0.25f;
    std::memcpy(d.data(), &v, 4);
    CHECK(parse_wav(wav_bytes(3, 1, 4000, 32, d)).samples[0] == -0.25);
  }
}

TEST_CASE("malformed containers") {
  auto b = wav_bytes(1, 1, 8000, 16, pcm16({1, 2}));
  b[3] = 'X';
  CHECK(code_of([&] { parse_wav(b); }) == ErrorCode::MalformedHeader);
  CHECK(code_of([&] { parse_wav(wav_bytes(2, 1, 8000, 4, {0, 0})); }) ==
        ErrorCode::UnsupportedEncoding);
  CHECK(code_of([&] { parse_wav(wav_bytes(1, 1, 8000, 16, pcm16({1, 2}), 40)); }) ==
        ErrorCode::TruncatedData);
  const std::vector<std::uint8_t> tiny = {'R', 'I', 'F', 'F'};
  CHECK(code_of([&] { parse_wav(tiny); }) == ErrorCode::MalformedHeader);
}

TEST_CASE("pcm16 write/parse round trip within one quantization step") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AudioClip clip{{}, 4000};
  for (int i = 0; i < 1000; ++i) clip.samples.push_back(u(rng));
  const auto back = parse_wav(write_wav_pcm16(clip));
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("annotation parsing") {
  const auto a = parse_annotation("0.036 2.511 0 0\n2.511 4.800 1 1\n\n");
  REQUIRE(a.size() == 2);
  CHECK(a[0].begin_s == 0.036);
  CHECK(a[0].end_s == 2.511);
  CHECK_FALSE(a[0].crackles);
  CHECK_FALSE(a[0].wheezes);
  CHECK(a[1].crackles);
  CHECK(a[1].wheezes);
  CHECK(code_of([] { parse_annotation("1.0 0.5 0 0"); }) == ErrorCode::InvertedInterval);
  CHECK(code_of([] { parse_annotation("1.0 2.0 0"); }) == ErrorCode::BadFieldCount);
  CHECK(code_of([] { parse_annotation("a 2.0 0 0"); }) == ErrorCode::NonNumericTime);
  CHECK(code_of([] { parse_annotation("1.0 2.0 2 0"); }) == ErrorCode::FlagOutOfRange);
}

TEST_CASE("filename metadata") {
  const auto m = parse_filename_metadata("101_1b1_Al_sc_Meditron.wav");
  CHECK(m.patient_id == "101");
  CHECK(m.recording_index == "1b1");
  CHECK(m.chest_location == "Al");
  CHECK(m.acquisition_mode == "sc");
  CHECK(m.equipment == "Meditron");
  const auto n = parse_filename_metadata("226_1b1_Pl_sc_LittC2SE.wav");
  CHECK(n.patient_id == "226");
  CHECK(n.equipment == "LittC2SE");
  CHECK(code_of([] { parse_filename_metadata("x_y_z.wav"); }) == ErrorCode::BadTokenCount);
}

TEST_CASE("diagnosis table") {
  const auto t = parse_diagnosis_table("101,URTI\n103\tasthma\n");
  CHECK(t.at("101") == Diagnosis::URTI);
  CHECK(t.at("103") == Diagnosis::Asthma);
  CHECK(code_of([] { parse_diagnosis_table("105,Flu"); }) == ErrorCode::UnknownDiagnosis);
  CHECK(code_of([] { parse_diagnosis_table("105,COPD\n105,URTI"); }) ==
        ErrorCode::DuplicatePatient);
}

TEST_CASE("cycle extraction") {
  Recording rec;
  rec.clip = AudioClip{std::vector<double>(4000 * 90, 0.1), 4000};
  rec.cycles = parse_annotation("0.0 0.5 0 1\n0.5 1.25 1 1\n");
  rec.diagnosis = Diagnosis::COPD;
  rec.source = parse_filename_metadata("101_1b1_Al_sc_Meditron");
  const auto cycles = extract_cycles(rec);
  REQUIRE(cycles.size() == 2);
  CHECK(cycles[0].clip.samples.size() == 2000);
  CHECK(cycles[0].anomaly == Anomaly::Wheezes);
  CHECK(cycles[1].anomaly == Anomaly::Both);
  CHECK(cycles[1].clip.samples.size() == 3000);
  CHECK(cycles[1].diagnosis == Diagnosis::COPD);
  CHECK(cycles[1].id() == "101_1b1_Al_sc_Meditron#1");

  rec.cycles = parse_annotation("80.0 91.0 0 0");
  CHECK(code_of([&] { extract_cycles(rec); }) == ErrorCode::OutOfBoundsInterval);
}

TEST_CASE("cycle lengths match the rounded interval within one sample") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 9.0);
  Recording rec;
  rec.clip = AudioClip{std::vector<double>(4000 * 10, 0.0), 4000};
  for (int i = 0; i < 100; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 0.01) continue;
    rec.cycles = {CycleAnnotation{a, b, false, false}};
    const auto c = extract_cycles(rec);
    const double expected = std::round((b - a) * 4000);
    CHECK(std::abs(static_cast<double>(c[0].clip.samples.size()) - expected) <= 1.0);
  }
}

TEST_CASE("anomaly flags are a bijection") {
  CHECK(anomaly_from_flags(false, false) == Anomaly::Normal);
  CHECK(anomaly_from_flags(true, false) == Anomaly::Crackles);
  CHECK(anomaly_from_flags(false, true) == Anomaly::Wheezes);
  CHECK(anomaly_from_flags(true, true) == Anomaly::Both);
}

TEST_CASE("pathology mapping") {
  CHECK(map_pathology_label(Diagnosis::COPD, PathologyTask::Ternary) == 1);
  CHECK(map_pathology_label(Diagnosis::Pneumonia, PathologyTask::Ternary) == 2);
  CHECK(map_pathology_label(Diagnosis::Healthy, PathologyTask::Binary) == 0);
  int sizes[3] = {0, 0, 0};
  for (int d = 0; d < kDiagnosisCount; ++d) {
    const auto dx = static_cast<Diagnosis>(d);
    ++sizes[map_pathology_label(dx, PathologyTask::Ternary)];
    CHECK(map_pathology_label(dx, PathologyTask::Binary) == (dx == Diagnosis::Healthy ? 0 : 1));
  }
  CHECK(sizes[0] == 1);
  CHECK(sizes[1] == 3);
  CHECK(sizes[2] == 4);
}

TEST_CASE("resampling") {
  SUBCASE("identity") {
    AudioClip c{{0.1, -0.2, 0.3}, 4000};
    CHECK(resample(c, 4000).samples == c.samples);
  }
  SUBCASE("dc is preserved away from the edges") {
    const auto out = resample(AudioClip{std::vector<double>(8000, 0.5), 8000}, 4000);
    CHECK(out.sample_rate == 4000);
    CHECK(std::abs(static_cast<double>(out.samples.size()) - 4000.0) <= 1.0);
    for (std::size_t i = 100; i + 100 < out.samples.size(); ++i)
      CHECK(std::abs(out.samples[i] - 0.5) <= 1e-6);
  }
  SUBCASE("100 Hz sine survives 8 kHz -> 4 kHz") {
    AudioClip in{{}, 8000};
    for (int i = 0; i < 16000; ++i)
      in.samples.push_back(std::sin(2 * std::numbers::pi * 100.0 * i / 8000.0));
    const auto out = resample(in, 4000);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 200; i + 200 < out.samples.size(); ++i) {
      const double ideal = std::sin(2 * std::numbers::pi * 100.0 * i / 4000.0);
      sxy += ideal * out.samples[i];
      sxx += out.samples[i] * out.samples[i];
      syy += ideal * ideal;
    }
    CHECK(sxy / std::sqrt(sxx * syy) >= 0.999);
  }
}

TEST_CASE("synthetic data") {
  SynthSpec spec;
  const auto a = synth_dataset(spec);
  const auto b = synth_dataset(spec);
  REQUIRE(a.size() == 200);
  int per_class[2] = {0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++per_class[a[i].label];
    CHECK(a[i].cycle.clip.samples == b[i].cycle.clip.samples);
  }
  CHECK(per_class[0] == 100);
  CHECK(per_class[1] == 100);
  spec.seed = 2;
  const auto c = synth_dataset(spec);
  CHECK(c[0].cycle.clip.samples != a[0].cycle.clip.samples);
}

}  // TEST_SUITE
