#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lltbrw {

enum class ErrorCode {
  NonNormalized,
  Reducible,
  NegativeWeight,
  ZeroTopWeight,
  DegenerateLazy,
  InvalidArgument,
  CapacityExceeded,
  ResolutionTooLow,
  SubcriticalOrCritical,
  HasExtinction,
  CountOverflow,
  Config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonNormalized: return "NonNormalized";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::ZeroTopWeight: return "ZeroTopWeight";
    case ErrorCode::DegenerateLazy: return "DegenerateLazy";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::SubcriticalOrCritical: return "SubcriticalOrCritical";
    case ErrorCode::HasExtinction: return "HasExtinction";
    case ErrorCode::CountOverflow: return "CountOverflow";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this one exception type;
/// callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lltbrw
