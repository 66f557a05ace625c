#include "torus_waves/errors.hpp"

namespace torus_waves {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorCode::NotUnitSpeed: return "NotUnitSpeed";
    case ErrorCode::DegenerateSpeed: return "DegenerateSpeed";
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::QuadratureUnconverged: return "QuadratureUnconverged";
    case ErrorCode::SingularCell: return "SingularCell";
    case ErrorCode::VolumeCapExceeded: return "VolumeCapExceeded";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

}  // namespace torus_waves
