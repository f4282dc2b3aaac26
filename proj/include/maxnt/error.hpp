#ifndef MAXNT_ERROR_HPP
#define MAXNT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxnt {

enum class ErrorCode {
  InvalidRegion,
  InvalidCount,
  InvalidArgument,
  UnlocalizableGraph,
  DisconnectedPatch,
  DegenerateConfiguration,
  DegenerateOverlap,
  ZeroDistance,
  NonPositivePower,
  Infeasible,
  NotConverged,
  EmptyNetwork,
  EmptyInput,
  LengthMismatch,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidRegion: return "InvalidRegion";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnlocalizableGraph: return "UnlocalizableGraph";
    case ErrorCode::DisconnectedPatch: return "DisconnectedPatch";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateOverlap: return "DegenerateOverlap";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::NonPositivePower: return "NonPositivePower";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base of every exception thrown by the library. The code identifies the
/// failure class; what() carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A required link cannot be made detectable within the transmit power cap.
class InfeasibleError : public Error {
 public:
  InfeasibleError(int from, int to, const std::string& message)
      : Error(ErrorCode::Infeasible, message), from_(from), to_(to) {}

  int from() const noexcept { return from_; }
  int to() const noexcept { return to_; }

 private:
  int from_;
  int to_;
};

}  // namespace maxnt

#endif  // MAXNT_ERROR_HPP
