#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mu {

enum class ErrorKind {
  InvalidLayout,
  InvalidArgument,
  Shape,
  EmptyInput,
  Numeric,
  TrainingDiverged,
  FileNotFound,
  Parse,
  NonBinaryLabel,
  NotFound,
  AlreadyRevoked,
  PolicyViolation,
  Corruption,
  Version,
  Dispatch,
  DegenerateAttackSet,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidLayout: return "invalid-layout";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::TrainingDiverged: return "training-diverged";
    case ErrorKind::FileNotFound: return "file-not-found";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::NonBinaryLabel: return "non-binary-label";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::AlreadyRevoked: return "already-revoked";
    case ErrorKind::PolicyViolation: return "policy-violation";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::Version: return "version";
    case ErrorKind::Dispatch: return "dispatch";
    case ErrorKind::DegenerateAttackSet: return "degenerate-attack-set";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mu
