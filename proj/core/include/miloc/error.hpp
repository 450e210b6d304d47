#pragma once

#include <stdexcept>
#include <string>

namespace miloc {

enum class ErrorKind {
  CoincidentNodes,
  NotARotation,
  DegenerateMeasurement,
  ZeroScore,
  AmbiguousDirection,
  NoMeasurements,
  DimensionMismatch,
  SingularFim,
  PackingInfeasible,
  EmptyInput,
  Config,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CoincidentNodes: return "CoincidentNodes";
    case ErrorKind::NotARotation: return "NotARotation";
    case ErrorKind::DegenerateMeasurement: return "DegenerateMeasurement";
    case ErrorKind::ZeroScore: return "ZeroScore";
    case ErrorKind::AmbiguousDirection: return "AmbiguousDirection";
    case ErrorKind::NoMeasurements: return "NoMeasurements";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularFim: return "SingularFim";
    case ErrorKind::PackingInfeasible: return "PackingInfeasible";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace miloc
