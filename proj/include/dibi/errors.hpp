#pragma once

#include <stdexcept>
#include <string>

namespace dibi {

// Root of the library's error hierarchy. Logical outcomes (a formula being
// false, a subkernel query being refuted) are values, not exceptions; these
// types are reserved for contract violations and missing capabilities.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EndpointMismatch : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NotAPermutation : Error {
  using Error::Error;
};

struct DuplicateVariable : Error {
  using Error::Error;
};

struct NotASubset : Error {
  using Error::Error;
};

struct SeqUndefined : Error {
  using Error::Error;
};

struct ParUndefined : Error {
  using Error::Error;
};

// Raised when an operation needs a capability (conditionals,
// del-cancellativity) the instance does not provide.
struct Unsupported : Error {
  using Error::Error;
};

struct ReassemblyFailed : Error {
  using Error::Error;
};

// Gauss conditioning: the pseudo-inverse route produced a split that does
// not reassemble within tolerance.
struct SingularBlock : ReassemblyFailed {
  using ReassemblyFailed::ReassemblyFailed;
};

struct OverlapViolation : Error {
  using Error::Error;
};

struct EmptyImage : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct TypeError : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct ParseError : Error {
  int line;
  int column;
  std::string expected;

  ParseError(const std::string& msg, int line_, int column_, std::string expected_)
      : Error(msg + " at " + std::to_string(line_) + ":" + std::to_string(column_) +
              (expected_.empty() ? "" : " (expected " + expected_ + ")")),
        line(line_),
        column(column_),
        expected(std::move(expected_)) {}
};

struct FileError : Error {
  using Error::Error;
};

}  // namespace dibi
