#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace decay {

enum class ErrorKind {
  DimensionMismatch,
  NegativeInput,
  InvalidParameter,
  Reducible,
  DegenerateLocation,
  BoundaryExit,
  NoPositivePivot,
  SingularLabeling,
  NegativeBarycentric,
  RefinementExhausted,
  PivotBudgetExceeded,
  NotDecayPoint,
  NoConvergence,
  OutOfRange,
  ReducibleDraw,
  ParseError,
  NotSerializable,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NegativeInput: return "NegativeInput";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::DegenerateLocation: return "DegenerateLocation";
    case ErrorKind::BoundaryExit: return "BoundaryExit";
    case ErrorKind::NoPositivePivot: return "NoPositivePivot";
    case ErrorKind::SingularLabeling: return "SingularLabeling";
    case ErrorKind::NegativeBarycentric: return "NegativeBarycentric";
    case ErrorKind::RefinementExhausted: return "RefinementExhausted";
    case ErrorKind::PivotBudgetExceeded: return "PivotBudgetExceeded";
    case ErrorKind::NotDecayPoint: return "NotDecayPoint";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::ReducibleDraw: return "ReducibleDraw";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NotSerializable: return "NotSerializable";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace decay
