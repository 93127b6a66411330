#include "layerlens/errors.hpp"

namespace layerlens {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateNormalization: return "DegenerateNormalization";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateScatter: return "DegenerateScatter";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NoEligibleLayer: return "NoEligibleLayer";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::ManifestBlobMismatch: return "ManifestBlobMismatch";
    case ErrorCode::CorruptBlob: return "CorruptBlob";
    case ErrorCode::UnknownPrompt: return "UnknownPrompt";
    case ErrorCode::InconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidReport: return "InvalidReport";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InsufficientAugmentations: return "InsufficientAugmentations";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
  }
  return "Unknown";
}

bool is_config_error(ErrorCode code) noexcept {
  return code == ErrorCode::ConfigError || code == ErrorCode::InvalidArgument;
}

}  // namespace layerlens
