#include "osslc/error.hpp"

namespace osslc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::PartialData: return "PartialData";
    case ErrorKind::InvalidThreshold: return "InvalidThreshold";
    case ErrorKind::ColumnMismatch: return "ColumnMismatch";
    case ErrorKind::MissingFeatureColumn: return "MissingFeatureColumn";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnlabeledRow: return "UnlabeledRow";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::InvalidHyperparam: return "InvalidHyperparam";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::NotProbabilistic: return "NotProbabilistic";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::ConstantColumn: return "ConstantColumn";
    case ErrorKind::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::Precondition: return "Precondition";
  }
  return "Unknown";
}

}  // namespace osslc
