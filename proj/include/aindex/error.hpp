#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aidx {

enum class ErrorCode {
  MissingFile,
  UnsupportedFormat,
  CorruptStream,
  IoError,
  DimensionMismatch,
  ImageTooSmall,
  InvalidArgument,
  ProviderUnavailable,
  NonDifferentiableProvider,
  InsufficientSamples,
  DegenerateObjective,
  ParseError,
  SchemaError,
  DuplicateId,
  NonDifferentiableInverter,
  EmptyCandidateSet,
  EmptyInput,
  LiveInverterRequired,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the toolkit carries a code so callers (the CLI,
// the partial-failure collector) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aidx
