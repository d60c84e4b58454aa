#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eco {

enum class ErrorCode {
  kInvalidParams,
  kNonPositiveNextSpeed,
  kTorqueOutOfRange,
  kPowerEnvelopeExceeded,
  kInfeasibleDemand,
  kOutOfHull,
  kEmptyHistory,
  kNoFeasiblePath,
  kStalePolicyBeyondHorizon,
  kTimeout,
  kZeroEnergy,
  kIo,
};

std::string_view ToString(ErrorCode code);

/// Exception thrown by every public operation of the library. The code
/// identifies the failure class so callers can react without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ToString(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eco
