#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vgame {

enum class ErrorCode {
  kInvalidInterval,
  kTooFewNodes,
  kInvalidQuadrature,
  kDimensionMismatch,
  kGridMismatch,
  kLengthMismatch,
  kSingularSystem,
  kNotCertified,
  kNotSymmetric,
  kBasisNotOrthonormal,
  kSingularStep,
  kAsymmetryDetected,
  kNodeNotOnGrid,
  kSingularG11,
  kSingularG3,
  kNoConvergence,
  kTransversalityViolated,
  kSingularWeight,
  kCaptureNotBracketed,
  kInnerNoConvergence,
  kInvariantViolated,
  kParseError,
  kValidationError,
  kMissingArtifact,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, so
// callers (the CLI in particular) can map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vgame
