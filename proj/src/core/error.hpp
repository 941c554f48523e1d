#pragma once

#include <stdexcept>
#include <string>

namespace m2n2 {

// Stable numeric values: these are exported unchanged through the C API.
enum class ErrorCode : int {
  Ok = 0,
  BadMagic = 1,
  DtypeMismatch = 2,
  NonFinite = 3,
  IoFailure = 4,
  MissingFile = 5,
  DimMismatch = 6,
  WeightError = 7,
  DegenerateRow = 8,
  NoConvergence = 9,
  NotDoublyStochastic = 10,
  SeedOutOfRange = 11,
  InvalidArgument = 12,
  NoCandidates = 13,
  EmptyPromptSet = 14,
  OutOfBounds = 15,
  EmptyHistory = 16,
  NoError = 17,
  SpecInvalid = 18,
  Internal = 99,
};

const char* error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace m2n2
