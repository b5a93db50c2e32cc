#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectrack {

enum class ErrorKind {
  InvalidInput,
  InsufficientSamples,
  SingularCovariance,
  ConfigMismatch,
  FormatError,
  CorruptDump,
  TrainingDiverged,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the toolkit; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::ConfigMismatch: return "ConfigMismatch";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::CorruptDump: return "CorruptDump";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace spectrack
