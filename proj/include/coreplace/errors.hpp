#pragma once

#include <stdexcept>
#include <string>

namespace coreplace {

/// Bad user input: schema violations, infeasible requests, inconsistent sizes.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. The message names the offending field (and line when known).
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Broken internal invariant. Never caused by user input.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or gradient became NaN/Inf during an update.
class NumericalError : public InternalError {
 public:
  using InternalError::InternalError;
};

}  // namespace coreplace
