#include "crossview/error.hpp"

namespace crossview {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateDepth: return "DegenerateDepth";
    case ErrorCode::kCoincidentCameras: return "CoincidentCameras";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kMissingWeights: return "MissingWeights";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kJointCountMismatch: return "JointCountMismatch";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kData: return "DataError";
  }
  return "Unknown";
}

}  // namespace crossview
