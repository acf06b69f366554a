#ifndef TTSHS_ERRORS_HPP
#define TTSHS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ttshs {

enum class ErrorCode {
  DimensionMismatch,
  NotHurwitz,
  NotNoiseImparting,
  TimingNotPhaseType,
  SingularSystem,
  SingularLyapunov,
  SamplerMismatch,
  UnreachableCv2,
  ParseError,
  SchemaError,
  ValidationError,
  NumericalFailure,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-readable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ttshs

#endif  // TTSHS_ERRORS_HPP
