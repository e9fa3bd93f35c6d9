#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acrkit {

/// Failure categories raised by the library. Each maps to a stable
/// kebab-case name used in machine-readable CLI error output.
enum class ErrorKind {
  kInvalidInput,
  kInsufficientData,
  kDegenerateModel,
  kDegenerateDirection,
  kBehindCamera,
  kCheiralityFailure,
  kInvalidIntrinsics,
  kAmbiguousNullspace,
  kMissingDepth,
  kDegenerateInit,
  kMissingPlane,
  kOrientation,
  kBudgetExceeded,
  kAmbiguousDirection,
  kEstimationFailure,
  kEmptyObservation,
  kInvalidScene,
  kMissingInput,
  kConfig,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view kind_name() const { return error_kind_name(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace acrkit
