#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oda {

enum class ErrorCode {
  DimensionMismatch,
  DomainViolation,
  ZeroMass,
  EmptySeeds,
  DuplicateClassSeed,
  UnknownLabel,
  NotInitialized,
  ScheduleExhausted,
  NotClassifier,
  TooFewSamples,
  FileNotFound,
  ParseError,
  EmptyDataset,
  InvalidArgument,
  ConfigError,
  FormatError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the CSV reader; `line` and `column` are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorCode::ParseError, what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace oda
