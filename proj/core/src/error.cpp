#include "topocf/error.hpp"

namespace topocf {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kZeroRecords: return "ZeroRecords";
    case ErrorCode::kZeroDegreeNode: return "ZeroDegreeNode";
    case ErrorCode::kMissingTimestamps: return "MissingTimestamps";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRankOutOfRange: return "RankOutOfRange";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kNonPositiveValue: return "NonPositiveValue";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kEmptyProjection: return "EmptyProjection";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kEmptyView: return "EmptyView";
    case ErrorCode::kRetryExhausted: return "RetryExhausted";
    case ErrorCode::kUnsupportedForKind: return "UnsupportedForKind";
    case ErrorCode::kDivergedTraining: return "DivergedTraining";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kEmptyAfterFiltering: return "EmptyAfterFiltering";
  }
  return "Unknown";
}

}  // namespace topocf
