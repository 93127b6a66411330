#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace layerlens {

enum class ErrorCode {
  // numerical preconditions
  ZeroMatrix,
  NonFinite,
  NotSymmetric,
  NoConvergence,
  DegenerateNormalization,
  TooShort,
  AllDegenerate,
  ZeroNormRow,
  ShapeMismatch,
  DegenerateScatter,
  TooFewSamples,
  NoEligibleLayer,
  ZeroVariance,
  LengthMismatch,
  InvalidArgument,
  // dump and report files
  InvalidManifest,
  UnsupportedDtype,
  ManifestBlobMismatch,
  CorruptBlob,
  UnknownPrompt,
  InconsistentDimensions,
  IoFailure,
  InvalidReport,
  // pipeline
  ConfigError,
  InsufficientAugmentations,
  KeyMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

// Configuration problems map to CLI exit code 2, everything else to 3.
bool is_config_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace layerlens
