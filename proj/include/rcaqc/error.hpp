#pragma once

#include <stdexcept>
#include <string>

namespace rcaqc {

enum class ErrorCode {
  UnsupportedFormat,
  CorruptHeader,
  InvalidLabel,
  InvalidData,
  IoError,
  EmptyMass,
  GridMismatch,
  UndefinedDistance,
  DivergedRegistration,
  NoReferences,
  InvalidPhantom,
  InvalidArgument,
  UndefinedCorrelation,
  InvalidConfig,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure path raises this with a code so
/// callers (the batch runner in particular) can map failures to outcomes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rcaqc
