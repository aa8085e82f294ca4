// SPDX-License-Identifier: Apache-2.0
#include "auscult/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "auscult/error.hpp"

namespace auscult {

namespace {

constexpr std::array<std::string_view, kDiagnosisCount> kDiagnosisNames = {
    "Healthy", "COPD", "Bronchiectasis", "Asthma",
    "URTI",    "LRTI", "Pneumonia",      "Bronchiolitis"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

double parse_time(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw Error(ErrorCode::NonNumericTime,
                "line " + std::to_string(line_no) + ": '" + std::string(field) + "'");
  return v;
}

bool parse_flag(std::string_view field, std::size_t line_no) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw Error(ErrorCode::FlagOutOfRange,
              "line " + std::to_string(line_no) + ": '" + std::string(field) + "'");
}

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace

std::string RecordingMetadata::stem() const {
  return patient_id + "_" + recording_index + "_" + chest_location + "_" +
         acquisition_mode + "_" + equipment;
}

std::string RespiratoryCycle::id() const {
  return source.stem() + "#" + std::to_string(index);
}

std::string_view diagnosis_name(Diagnosis d) {
  return kDiagnosisNames[static_cast<std::size_t>(d)];
}

std::optional<Diagnosis> diagnosis_from_name(std::string_view name) {
  const std::string key = lower(trim(name));
  for (std::size_t i = 0; i < kDiagnosisNames.size(); ++i)
    if (lower(kDiagnosisNames[i]) == key) return static_cast<Diagnosis>(i);
  return std::nullopt;
}

std::string_view anomaly_name(Anomaly a) {
  switch (a) {
    case Anomaly::Normal: return "normal";
    case Anomaly::Crackles: return "crackles";
    case Anomaly::Wheezes: return "wheezes";
    case Anomaly::Both: return "both";
  }
  return "normal";
}

Anomaly anomaly_from_flags(bool crackles, bool wheezes) {
  if (crackles && wheezes) return Anomaly::Both;
  if (crackles) return Anomaly::Crackles;
  if (wheezes) return Anomaly::Wheezes;
  return Anomaly::Normal;
}

std::vector<CycleAnnotation> parse_annotation(std::string_view text) {
  std::vector<CycleAnnotation> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 4)
      throw Error(ErrorCode::BadFieldCount,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields");
    CycleAnnotation a;
    a.begin_s = parse_time(fields[0], line_no);
    a.end_s = parse_time(fields[1], line_no);
    a.crackles = parse_flag(fields[2], line_no);
    a.wheezes = parse_flag(fields[3], line_no);
    if (a.begin_s < 0.0 || a.end_s <= a.begin_s)
      throw Error(ErrorCode::InvertedInterval,
                  "line " + std::to_string(line_no) + ": [" + std::string(fields[0]) +
                      ", " + std::string(fields[1]) + ")");
    out.push_back(a);
  }
  return out;
}

RecordingMetadata parse_filename_metadata(std::string_view name) {
  std::string base = std::filesystem::path(std::string(name)).stem().string();
  std::vector<std::string> tokens;
  std::stringstream ss(base);
  std::string tok;
  while (std::getline(ss, tok, '_')) tokens.push_back(tok);
  if (tokens.size() != 5 ||
      std::any_of(tokens.begin(), tokens.end(), [](const auto& t) { return t.empty(); }))
    throw Error(ErrorCode::BadTokenCount,
                "'" + std::string(name) + "' has " + std::to_string(tokens.size()) +
                    " tokens, expected 5");
  return {tokens[0], tokens[1], tokens[2], tokens[3], tokens[4]};
}

std::map<std::string, Diagnosis> parse_diagnosis_table(std::string_view text) {
  std::map<std::string, Diagnosis> out;
  for (std::string_view raw : split_lines(text)) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    std::size_t sep = line.find_first_of(",\t");
    if (sep == std::string_view::npos)
      throw Error(ErrorCode::BadFieldCount, "no separator in '" + std::string(line) + "'");
    std::string patient(trim(line.substr(0, sep)));
    std::string_view name = trim(line.substr(sep + 1));
    auto d = diagnosis_from_name(name);
    if (!d) throw Error(ErrorCode::UnknownDiagnosis, "'" + std::string(name) + "'");
    if (!out.emplace(patient, *d).second)
      throw Error(ErrorCode::DuplicatePatient, "patient " + patient);
  }
  return out;
}

std::vector<RespiratoryCycle> extract_cycles(const Recording& recording) {
  const auto& clip = recording.clip;
  const double rate = clip.sample_rate;
  std::vector<RespiratoryCycle> out;
  out.reserve(recording.cycles.size());
  for (std::size_t i = 0; i < recording.cycles.size(); ++i) {
    const auto& a = recording.cycles[i];
    std::size_t begin = round_half_up(a.begin_s * rate);
    std::size_t end = round_half_up(a.end_s * rate);
    if (end > clip.samples.size())
      throw Error(ErrorCode::OutOfBoundsInterval,
                  recording.source.stem() + " cycle " + std::to_string(i) + " ends at " +
                      std::to_string(a.end_s) + " s, clip lasts " +
                      std::to_string(clip.duration_s()) + " s");
    if (begin >= end)
      throw Error(ErrorCode::InvertedInterval,
                  recording.source.stem() + " cycle " + std::to_string(i) +
                      " is empty at this sample rate");
    RespiratoryCycle c;
    c.clip.sample_rate = clip.sample_rate;
    c.clip.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                          clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
    c.anomaly = anomaly_from_flags(a.crackles, a.wheezes);
    c.diagnosis = recording.diagnosis;
    c.source = recording.source;
    c.index = i;
    out.push_back(std::move(c));
  }
  return out;
}

int map_pathology_label(Diagnosis d, PathologyTask task) {
  if (d == Diagnosis::Healthy) return 0;
  if (task == PathologyTask::Binary) return 1;
  switch (d) {
    case Diagnosis::COPD:
    case Diagnosis::Bronchiectasis:
    case Diagnosis::Asthma:
      return 1;
    default:
      return 2;
  }
}

std::vector<SyntheticCycle> synth_dataset(const SynthSpec& spec) {
  if (spec.n_sequences == 0 || spec.classes < 2 || spec.sample_rate <= 0 ||
      spec.min_duration_s <= 0.0 || spec.max_duration_s < spec.min_duration_s)
    throw Error(ErrorCode::InvalidConfig, "synthetic dataset spec out of range");

  constexpr std::array<Diagnosis, 4> kDiagnosisForClass = {
      Diagnosis::Healthy, Diagnosis::COPD, Diagnosis::URTI, Diagnosis::Asthma};

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double rate = spec.sample_rate;
  const double band = std::min(1700.0, 0.45 * rate - 200.0);
  const double spacing = band / spec.classes;

  std::vector<SyntheticCycle> out;
  out.reserve(spec.n_sequences);
  for (std::size_t i = 0; i < spec.n_sequences; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
    const double duration =
        spec.min_duration_s + (spec.max_duration_s - spec.min_duration_s) * unit(rng);
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));

    std::vector<double> x(n, 0.0);
    double lp = 0.0;
    for (auto& v : x) {
      lp = 0.7 * lp + 0.3 * gauss(rng);
      v = 0.05 * lp;
    }

    const double tone_a = 200.0 + spacing * label;
    const double tone_b = tone_a + 0.5 * spacing;
    std::size_t pos = static_cast<std::size_t>(0.05 * rate * unit(rng));
    for (int burst = 0; pos < n; ++burst) {
      const double f = (burst % 2 == 0) ? tone_a : tone_b;
      const auto len = static_cast<std::size_t>((0.20 + 0.15 * unit(rng)) * rate);
      const double amp = 0.3 + 0.2 * unit(rng);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t k = 0; k < len && pos + k < n; ++k) {
        double env = std::sin(std::numbers::pi * k / static_cast<double>(len));
        x[pos + k] += amp * env *
                      std::sin(2.0 * std::numbers::pi * f * k / rate + phase);
      }
      pos += len + static_cast<std::size_t>((0.05 + 0.05 * unit(rng)) * rate);
    }
    for (auto& v : x) v = std::clamp(v, -1.0, 1.0);

    SyntheticCycle item;
    item.label = label;
    item.cycle.clip = AudioClip{std::move(x), spec.sample_rate};
    item.cycle.anomaly = static_cast<Anomaly>(label % 4);
    item.cycle.diagnosis = kDiagnosisForClass[static_cast<std::size_t>(label % 4)];
    item.cycle.source = {std::to_string(1000 + i), "1b1", "Al", "sc", "Synth"};
    item.cycle.index = 0;
    out.push_back(std::move(item));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Recording> load_recordings(const std::filesystem::path& data_dir,
                                       const std::map<std::string, Diagnosis>& diagnoses,
                                       int target_rate, std::size_t* skipped) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(data_dir))
    throw Error(ErrorCode::Io, "not a directory: " + data_dir.string());

  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(data_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      wavs.push_back(entry.path());
  std::sort(wavs.begin(), wavs.end());

  std::size_t n_skipped = 0;
  std::vector<Recording> out;
  for (const auto& wav : wavs) {
    fs::path txt = wav;
    txt.replace_extension(".txt");
    RecordingMetadata meta = parse_filename_metadata(wav.filename().string());
    auto diag = diagnoses.find(meta.patient_id);
    if (!fs::exists(txt) || diag == diagnoses.end()) {
      ++n_skipped;
      continue;
    }
    Recording rec;
    rec.source = std::move(meta);
    rec.diagnosis = diag->second;
    rec.clip = resample(read_wav_file(wav), target_rate);
    rec.cycles = parse_annotation(read_text_file(txt));
    std::stable_sort(rec.cycles.begin(), rec.cycles.end(),
                     [](const auto& a, const auto& b) { return a.begin_s < b.begin_s; });
    out.push_back(std::move(rec));
  }
  if (skipped) *skipped = n_skipped;
  return out;
}

}  // namespace auscult
