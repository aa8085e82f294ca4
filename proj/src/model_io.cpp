// SPDX-License-Identifier: Apache-2.0
#include "auscult/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "auscult/error.hpp"

namespace auscult {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model files are written in host byte order, which must be little-endian");

constexpr char kBundleMagic[8] = {'A', 'U', 'S', 'C', 'M', 'D', 'L', '1'};
constexpr char kStatsMagic[8] = {'A', 'U', 'S', 'C', 'N', 'R', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void vec(std::span<const double> v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

private:
  std::vector<std::uint8_t> out_;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void raw(void* p, std::size_t n) {
    if (pos_ + n > b_.size()) throw Error(ErrorCode::BadModelFile, "unexpected end of file");
    std::memcpy(p, b_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<double> vec() {
    const std::uint32_t n = u32();
    if (static_cast<std::size_t>(n) * 8 > b_.size() - pos_)
      throw Error(ErrorCode::BadModelFile, "vector length exceeds file");
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  void expect_magic(const char (&magic)[8]) {
    char got[8];
    raw(got, 8);
    if (std::memcmp(got, magic, 8) != 0) throw Error(ErrorCode::BadModelFile, "bad magic");
    if (const auto v = u32(); v != kVersion)
      throw Error(ErrorCode::BadModelFile, "unsupported version " + std::to_string(v));
  }
  bool done() const { return pos_ == b_.size(); }

private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void write_stats(Writer& w, const NormStats& s) {
  w.u8(static_cast<std::uint8_t>(s.method));
  w.vec(s.mean);
  w.vec(s.stddev);
  w.vec(s.min);
  w.vec(s.max);
}

NormStats read_stats(Reader& r) {
  NormStats s;
  const auto m = r.u8();
  if (m > static_cast<std::uint8_t>(NormMethod::ZScore))
    throw Error(ErrorCode::BadModelFile, "bad normalization method");
  s.method = static_cast<NormMethod>(m);
  s.mean = r.vec();
  s.stddev = r.vec();
  s.min = r.vec();
  s.max = r.vec();
  const auto d = s.mean.size();
  if (s.stddev.size() != d || s.min.size() != d || s.max.size() != d)
    throw Error(ErrorCode::BadModelFile, "normalization vectors differ in length");
  return s;
}

std::span<const double> as_span(const rnn::Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

std::vector<std::uint8_t> encode_bundle(const ModelBundle& bundle) {
  const auto& m = bundle.model;
  const auto& c = m.config;
  Writer w;
  w.raw(kBundleMagic, 8);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(c.cell));
  w.u8(c.bidirectional ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.layers));
  w.u32(static_cast<std::uint32_t>(c.hidden));
  w.u32(static_cast<std::uint32_t>(c.n_classes));
  w.u32(static_cast<std::uint32_t>(c.n_features));
  w.f64(c.dropout);
  w.f64(c.recurrent_dropout);
  w.u32(static_cast<std::uint32_t>(m.params.size()));
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    const auto& p = m.params[k];
    w.str(m.names[k]);
    w.u32(static_cast<std::uint32_t>(p.rows()));
    w.u32(static_cast<std::uint32_t>(p.cols()));
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j) w.f64(p(i, j));
  }
  w.vec(as_span(m.running_mean));
  w.vec(as_span(m.running_var));
  write_stats(w, bundle.stats);
  w.str(bundle.setting_id);
  w.str(bundle.task);
  w.str(bundle.pathology_unit);
  return w.take();
}

ModelBundle decode_bundle(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.expect_magic(kBundleMagic);
  rnn::ModelConfig c;
  const auto cell = r.u8();
  if (cell > 1) throw Error(ErrorCode::BadModelFile, "bad cell type");
  c.cell = static_cast<rnn::CellType>(cell);
  c.bidirectional = r.u8() != 0;
  c.layers = r.u32();
  c.hidden = r.u32();
  c.n_classes = r.u32();
  c.n_features = r.u32();
  c.dropout = r.f64();
  c.recurrent_dropout = r.f64();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadModelFile, e.what());
  }

  ModelBundle bundle;
  bundle.model = rnn::RnnModel(c);
  auto& m = bundle.model;
  if (r.u32() != m.params.size())
    throw Error(ErrorCode::BadModelFile, "tensor count does not match config");
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    auto& p = m.params[k];
    const std::string name = r.str();
    const auto rows = r.u32(), cols = r.u32();
    if (name != m.names[k] || rows != p.rows() || cols != p.cols())
      throw Error(ErrorCode::BadModelFile, "tensor '" + name + "' does not match config");
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = r.f64();
  }
  auto mean = r.vec(), var = r.vec();
  if (mean.size() != c.n_features || var.size() != c.n_features)
    throw Error(ErrorCode::BadModelFile, "batch-norm statistics length");
  m.running_mean = Eigen::Map<rnn::Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  m.running_var = Eigen::Map<rnn::Vector>(var.data(), static_cast<Eigen::Index>(var.size()));
  bundle.stats = read_stats(r);
  bundle.setting_id = r.str();
  bundle.task = r.str();
  bundle.pathology_unit = r.str();
  if (!r.done()) throw Error(ErrorCode::BadModelFile, "trailing bytes");
  return bundle;
}

std::vector<std::uint8_t> encode_norm_stats(const NormStats& stats) {
  Writer w;
  w.raw(kStatsMagic, 8);
  w.u32(kVersion);
  write_stats(w, stats);
  return w.take();
}

NormStats decode_norm_stats(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.expect_magic(kStatsMagic);
  NormStats s = read_stats(r);
  if (!r.done()) throw Error(ErrorCode::BadModelFile, "trailing bytes");
  return s;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  write_binary_file(path, encode_bundle(bundle));
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  return decode_bundle(read_binary_file(path));
}

void save_norm_stats(const std::filesystem::path& path, const NormStats& stats) {
  write_binary_file(path, encode_norm_stats(stats));
}

NormStats load_norm_stats(const std::filesystem::path& path) {
  return decode_norm_stats(read_binary_file(path));
}

}  // namespace auscult
