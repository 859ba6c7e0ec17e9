#include "uclab/errors.hpp"

namespace uclab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EvaluationAtOrigin: return "EvaluationAtOrigin";
    case ErrorCode::MissingHessian: return "MissingHessian";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::NonIntegrable: return "NonIntegrable";
    case ErrorCode::WeightOverflow: return "WeightOverflow";
    case ErrorCode::UnsupportedField: return "UnsupportedField";
    case ErrorCode::ZeroRHS: return "ZeroRHS";
    case ErrorCode::NotHalfInteger: return "NotHalfInteger";
    case ErrorCode::DegenerateAnnulus: return "DegenerateAnnulus";
    case ErrorCode::InvalidRatios: return "InvalidRatios";
    case ErrorCode::RatioNotAboveOne: return "RatioNotAboveOne";
    case ErrorCode::ZeroSolution: return "ZeroSolution";
    case ErrorCode::BoundsViolated: return "BoundsViolated";
    case ErrorCode::AdmissibilityFailed: return "AdmissibilityFailed";
    case ErrorCode::GrowthConditionFailed: return "GrowthConditionFailed";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonElliptic: return "NonElliptic";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace uclab
