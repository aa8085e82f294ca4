// SPDX-License-Identifier: Apache-2.0
#include "auscult/error.hpp"

namespace auscult {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::BadFieldCount: return "BadFieldCount";
    case ErrorCode::NonNumericTime: return "NonNumericTime";
    case ErrorCode::FlagOutOfRange: return "FlagOutOfRange";
    case ErrorCode::InvertedInterval: return "InvertedInterval";
    case ErrorCode::BadTokenCount: return "BadTokenCount";
    case ErrorCode::UnknownDiagnosis: return "UnknownDiagnosis";
    case ErrorCode::DuplicatePatient: return "DuplicatePatient";
    case ErrorCode::OutOfBoundsInterval: return "OutOfBoundsInterval";
    case ErrorCode::DegenerateFilter: return "DegenerateFilter";
    case ErrorCode::CycleTooShort: return "CycleTooShort";
    case ErrorCode::EmptyAfterGrouping: return "EmptyAfterGrouping";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InconsistentFeatureDim: return "InconsistentFeatureDim";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadModelFile: return "BadModelFile";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::LabelOutOfRange:
      return ErrorCategory::Validation;
    case ErrorCode::NumericFailure:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace auscult
