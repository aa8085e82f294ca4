// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace auscult {

enum class ErrorCode {
  // audio / dataset
  MalformedHeader,
  UnsupportedEncoding,
  TruncatedData,
  BadFieldCount,
  NonNumericTime,
  FlagOutOfRange,
  InvertedInterval,
  BadTokenCount,
  UnknownDiagnosis,
  DuplicatePatient,
  OutOfBoundsInterval,
  // dsp / frames
  DegenerateFilter,
  CycleTooShort,
  EmptyAfterGrouping,
  // normalize
  EmptyInput,
  DimensionMismatch,
  // rnn
  ShapeMismatch,
  LabelOutOfRange,
  DegenerateBatch,
  EmptyDataset,
  InconsistentFeatureDim,
  NumericFailure,
  // metrics
  EmptyClass,
  LengthMismatch,
  ZeroDenominator,
  // experiment plumbing
  InvalidConfig,
  IdMismatch,
  UnknownLabel,
  Io,
  BadModelFile,
};

/// Coarse grouping used for process exit codes.
enum class ErrorCategory { Validation = 1, Data = 2, Numeric = 3 };

std::string_view error_name(ErrorCode code) noexcept;
ErrorCategory error_category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-name prefix.
  const std::string& detail() const noexcept { return detail_; }
  ErrorCategory category() const noexcept { return error_category(code_); }

private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace auscult
