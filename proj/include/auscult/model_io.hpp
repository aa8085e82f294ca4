// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "auscult/normalize.hpp"
#include "auscult/rnn.hpp"

namespace auscult {

/// Everything needed to reproduce predictions from raw cycles.
struct ModelBundle {
  rnn::RnnModel model;
  NormStats stats;
  std::string setting_id;
  std::string task;
  std::string pathology_unit;  // "recording" or "cycle"; empty for anomaly tasks
};

// Binary layout, little-endian throughout:
//   magic "AUSCMDL1", u32 version,
//   config (u8 cell, u8 bidirectional, u32 layers, hidden, n_classes,
//           n_features, f64 dropout, recurrent_dropout),
//   u32 tensor count, per tensor: str name, u32 rows, u32 cols, f64[] row-major,
//   f64 vector running mean, running var,
//   norm stats (u8 method, f64 vectors mean, std, min, max),
//   str setting id, str task, str pathology unit.
// Strings and vectors are u32-length-prefixed.
std::vector<std::uint8_t> encode_bundle(const ModelBundle& bundle);
ModelBundle decode_bundle(std::span<const std::uint8_t> bytes);

/// Magic "AUSCNRM1", u32 version, then the norm stats block above.
std::vector<std::uint8_t> encode_norm_stats(const NormStats& stats);
NormStats decode_norm_stats(std::span<const std::uint8_t> bytes);

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);
void save_norm_stats(const std::filesystem::path& path, const NormStats& stats);
NormStats load_norm_stats(const std::filesystem::path& path);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace auscult
