#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfloc {

enum class ErrorCode {
  kContractViolation,
  kEmptyInput,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kDimensionOverflow,
  kParse,
  kNonFinite,
  kHeaderMismatch,
  kColumnCount,
  kUnknownToken,
  kUnknownKey,
  kInvalidValue,
  kIo,
  kUnobservablePose,
  kNoCorrespondences,
  kNumericalFailure,
  kSceneTooSmall,
  kNoPointsInRange,
  kLengthMismatch,
  kRegistrationFailed,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Registration failure raised by the tracker; carries the step that failed.
class TrackingError : public Error {
 public:
  TrackingError(std::size_t step, ErrorCode cause, const std::string& what)
      : Error(ErrorCode::kRegistrationFailed, what), step_(step), cause_(cause) {}

  std::size_t step() const noexcept { return step_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  std::size_t step_;
  ErrorCode cause_;
};

}  // namespace dfloc
