#pragma once

#include <stdexcept>
#include <string>

namespace crossview {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateDepth,
  kCoincidentCameras,
  kIllConditioned,
  kMissingWeights,
  kDimensionMismatch,
  kSingularSystem,
  kJointCountMismatch,
  kConfig,
  kData,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace crossview
