#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace torus_waves {

enum class ErrorCode {
  InvalidArgument,
  InvalidLevel,
  Degenerate,
  RadiusOutOfRange,
  NotUnitSpeed,
  DegenerateSpeed,
  InvalidSample,
  QuadratureUnconverged,
  SingularCell,
  VolumeCapExceeded,
  ConfigMismatch,
  SchemaMismatch,
  IOFailure,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a stable machine-readable code. The CLI maps these
/// to exit status 1 and a JSON error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace torus_waves
