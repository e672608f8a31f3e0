#pragma once

#include <stdexcept>
#include <string>

namespace topocf {

enum class ErrorCode {
  kConfig,
  kIo,
  kZeroRecords,
  kZeroDegreeNode,
  kMissingTimestamps,
  kIndexOutOfRange,
  kDimensionMismatch,
  kRankOutOfRange,
  kNonFiniteGradient,
  kNonFiniteValue,
  kZeroVariance,
  kNonPositiveValue,
  kTooFewSamples,
  kEmptyProjection,
  kEmptySample,
  kEmptyView,
  kRetryExhausted,
  kUnsupportedForKind,
  kDivergedTraining,
  kRankDeficient,
  kEmptyAfterFiltering,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

}  // namespace topocf
