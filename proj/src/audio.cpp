// SPDX-License-Identifier: Apache-2.0
#include "auscult/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "auscult/error.hpp"

namespace auscult {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

struct WavFormat {
  std::uint16_t encoding = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const std::uint8_t* p, const WavFormat& fmt) {
  if (fmt.encoding == kFormatFloat) {
    if (fmt.bits == 32) {
      std::uint32_t raw = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
      float v;
      std::memcpy(&v, &raw, sizeof v);
      return v;
    }
    std::uint64_t raw = 0;
    for (int i = 7; i >= 0; --i) raw = (raw << 8) | p[i];
    double v;
    std::memcpy(&v, &raw, sizeof v);
    return v;
  }
  switch (fmt.bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: {
      auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default: {
      auto v = static_cast<std::int32_t>(
          static_cast<std::uint32_t>(p[0]) |
          (static_cast<std::uint32_t>(p[1]) << 8) |
          (static_cast<std::uint32_t>(p[2]) << 16) |
          (static_cast<std::uint32_t>(p[3]) << 24));
      return v / 2147483648.0;
    }
  }
}

}  // namespace

AudioClip parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw Error(ErrorCode::MalformedHeader, "not a RIFF/WAVE container");

  WavFormat fmt;
  bool have_fmt = false;
  std::size_t data_at = 0;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    std::size_t body = pos + 8;
    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16 || body + 16 > bytes.size())
        throw Error(ErrorCode::MalformedHeader, "fmt chunk too short");
      fmt.encoding = read_u16(bytes, body);
      fmt.channels = read_u16(bytes, body + 2);
      fmt.rate = read_u32(bytes, body + 4);
      fmt.bits = read_u16(bytes, body + 14);
      if (fmt.encoding == kFormatExtensible) {
        if (chunk_size < 40 || body + 26 > bytes.size())
          throw Error(ErrorCode::MalformedHeader, "extensible fmt chunk too short");
        fmt.encoding = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data_at = body;
      data_size = chunk_size;
      if (body + chunk_size > bytes.size())
        throw Error(ErrorCode::TruncatedData,
                    "data chunk declares " + std::to_string(chunk_size) +
                        " bytes, " + std::to_string(bytes.size() - body) +
                        " present");
      have_data = true;
      break;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt) throw Error(ErrorCode::MalformedHeader, "missing fmt chunk");
  if (!have_data) throw Error(ErrorCode::MalformedHeader, "missing data chunk");
  if (fmt.channels == 0 || fmt.rate == 0)
    throw Error(ErrorCode::MalformedHeader, "zero channels or sample rate");

  bool pcm_ok = fmt.encoding == kFormatPcm &&
                (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  bool float_ok = fmt.encoding == kFormatFloat && (fmt.bits == 32 || fmt.bits == 64);
  if (!pcm_ok && !float_ok)
    throw Error(ErrorCode::UnsupportedEncoding,
                "format tag " + std::to_string(fmt.encoding) + ", " +
                    std::to_string(fmt.bits) + " bits");

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw Error(ErrorCode::TruncatedData, "no sample frames");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.rate);
  clip.samples.resize(n_frames);
  const std::uint8_t* p = bytes.data() + data_at;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < fmt.channels; ++ch)
      acc += decode_sample(p + i * frame_bytes + ch * bytes_per_sample, fmt);
    double v = acc / fmt.channels;
    if (!std::isfinite(v))
      throw Error(ErrorCode::UnsupportedEncoding, "non-finite sample value");
    clip.samples[i] = v;
  }
  return clip;
}

AudioClip read_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

std::vector<std::uint8_t> write_wav_pcm16(const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  auto put_u16 = [&](std::uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back(v >> 8);
  };
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
  };
  const auto rate = static_cast<std::uint32_t>(clip.sample_rate);
  put_tag("RIFF");
  put_u32(36 + data_bytes);
  put_tag("WAVE");
  put_tag("fmt ");
  put_u32(16);
  put_u16(kFormatPcm);
  put_u16(1);
  put_u32(rate);
  put_u32(rate * 2);
  put_u16(2);
  put_u16(16);
  put_tag("data");
  put_u32(data_bytes);
  for (double s : clip.samples) {
    double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(static_cast<std::uint16_t>(v));
  }
  return out;
}

void write_wav_file(const std::filesystem::path& path, const AudioClip& clip) {
  auto bytes = write_wav_pcm16(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0)
    throw Error(ErrorCode::InvalidConfig, "target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;
  if (clip.samples.empty()) return AudioClip{{}, target_rate};

  const auto& x = clip.samples;
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  const double src_per_out = static_cast<double>(clip.sample_rate) / target_rate;

  // Low-pass taps, cutoff in cycles per source sample.
  std::vector<double> taps{1.0};
  std::ptrdiff_t half = 0;
  if (target_rate < clip.sample_rate) {
    const double fc = 0.45 * target_rate / clip.sample_rate;
    half = static_cast<std::ptrdiff_t>(std::ceil(10.0 / (2.0 * fc)));
    taps.assign(2 * half + 1, 0.0);
    double sum = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      double t = static_cast<double>(k);
      double sinc = k == 0 ? 2.0 * fc
                           : std::sin(2.0 * std::numbers::pi * fc * t) /
                                 (std::numbers::pi * t);
      double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * (k + half) /
                                        (2.0 * half));
      taps[k + half] = sinc * w;
      sum += taps[k + half];
    }
    for (double& t : taps) t /= sum;
  }

  auto filtered = [&](std::ptrdiff_t i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i - k, 0, n_in - 1);
      acc += taps[k + half] * x[j];
    }
    return acc;
  };

  const auto n_out = std::max<std::ptrdiff_t>(
      1, std::llround(static_cast<double>(n_in) * target_rate / clip.sample_rate));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  std::ptrdiff_t cached_i = -1;
  double cached_a = 0.0, cached_b = 0.0;
  for (std::ptrdiff_t j = 0; j < n_out; ++j) {
    double pos = j * src_per_out;
    auto i0 = static_cast<std::ptrdiff_t>(std::floor(pos));
    i0 = std::min(i0, n_in - 1);
    double frac = std::min(pos - i0, 1.0);
    if (i0 != cached_i) {
      cached_a = (i0 == cached_i + 1 && cached_i >= 0) ? cached_b : filtered(i0);
      cached_b = filtered(std::min(i0 + 1, n_in - 1));
      cached_i = i0;
    }
    out.samples[j] = frac == 0.0 ? cached_a : cached_a + frac * (cached_b - cached_a);
  }
  return out;
}

}  // namespace auscult
