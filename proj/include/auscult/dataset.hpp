// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auscult/audio.hpp"

namespace auscult {

struct CycleAnnotation {
  double begin_s = 0.0;
  double end_s = 0.0;
  bool crackles = false;
  bool wheezes = false;
};

/// Tokens of an ICBHI-style file name, e.g. "101_1b1_Al_sc_Meditron.wav".
struct RecordingMetadata {
  std::string patient_id;
  std::string recording_index;
  std::string chest_location;
  std::string acquisition_mode;
  std::string equipment;

  std::string stem() const;
  bool operator==(const RecordingMetadata&) const = default;
};

enum class Diagnosis {
  Healthy,
  COPD,
  Bronchiectasis,
  Asthma,
  URTI,
  LRTI,
  Pneumonia,
  Bronchiolitis,
};
inline constexpr int kDiagnosisCount = 8;

std::string_view diagnosis_name(Diagnosis d);
std::optional<Diagnosis> diagnosis_from_name(std::string_view name);

enum class Anomaly { Normal, Crackles, Wheezes, Both };

std::string_view anomaly_name(Anomaly a);
Anomaly anomaly_from_flags(bool crackles, bool wheezes);

struct Recording {
  AudioClip clip;
  std::vector<CycleAnnotation> cycles;
  Diagnosis diagnosis = Diagnosis::Healthy;
  RecordingMetadata source;
};

struct RespiratoryCycle {
  AudioClip clip;
  Anomaly anomaly = Anomaly::Normal;
  Diagnosis diagnosis = Diagnosis::Healthy;
  RecordingMetadata source;
  std::size_t index = 0;  // position within the recording

  std::string id() const;
};

/// One cycle per non-empty line: "begin end crackles wheezes".
std::vector<CycleAnnotation> parse_annotation(std::string_view text);

RecordingMetadata parse_filename_metadata(std::string_view name);

/// "patient_id,diagnosis" or "patient_id<TAB>diagnosis" per line.
std::map<std::string, Diagnosis> parse_diagnosis_table(std::string_view text);

/// Slices [round(begin*rate), round(end*rate)) per annotation.
std::vector<RespiratoryCycle> extract_cycles(const Recording& recording);

enum class PathologyTask { Binary, Ternary };

/// Binary: 0 healthy, 1 unhealthy. Ternary: 0 healthy, 1 chronic, 2 non-chronic.
int map_pathology_label(Diagnosis d, PathologyTask task);

struct SynthSpec {
  std::size_t n_sequences = 200;
  int classes = 2;
  std::uint64_t seed = 1;
  int sample_rate = kCanonicalRate;
  double min_duration_s = 1.5;
  double max_duration_s = 3.0;
};

struct SyntheticCycle {
  RespiratoryCycle cycle;
  int label = 0;
};

/// Balanced, seeded, separable-by-construction cycles. Class k carries
/// band-limited noise plus tone bursts alternating between two class-specific
/// frequencies in a class-specific order. Labels 0..3 also set a consistent
/// anomaly (Normal, Crackles, Wheezes, Both) and diagnosis (Healthy, COPD,
/// URTI, Asthma).
std::vector<SyntheticCycle> synth_dataset(const SynthSpec& spec);

/// Loads every *.wav with a sibling *.txt annotation under `data_dir`,
/// resampled to `target_rate`. Recordings of patients missing from the
/// diagnosis table are skipped and counted in `skipped`.
std::vector<Recording> load_recordings(const std::filesystem::path& data_dir,
                                       const std::map<std::string, Diagnosis>& diagnoses,
                                       int target_rate, std::size_t* skipped = nullptr);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace auscult
