#include "acrkit/error.hpp"

namespace acrkit {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kDegenerateModel: return "degenerate-model";
    case ErrorKind::kDegenerateDirection: return "degenerate-direction";
    case ErrorKind::kBehindCamera: return "behind-camera";
    case ErrorKind::kCheiralityFailure: return "cheirality-failure";
    case ErrorKind::kInvalidIntrinsics: return "invalid-intrinsics";
    case ErrorKind::kAmbiguousNullspace: return "ambiguous-nullspace";
    case ErrorKind::kMissingDepth: return "missing-depth";
    case ErrorKind::kDegenerateInit: return "degenerate-init";
    case ErrorKind::kMissingPlane: return "missing-plane";
    case ErrorKind::kOrientation: return "orientation";
    case ErrorKind::kBudgetExceeded: return "budget-exceeded";
    case ErrorKind::kAmbiguousDirection: return "ambiguous-direction";
    case ErrorKind::kEstimationFailure: return "estimation-failure";
    case ErrorKind::kEmptyObservation: return "empty-observation";
    case ErrorKind::kInvalidScene: return "invalid-scene";
    case ErrorKind::kMissingInput: return "missing-input";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace acrkit
