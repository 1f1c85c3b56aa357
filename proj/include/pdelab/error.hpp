#pragma once

#include <stdexcept>
#include <string>

namespace pdelab {

/// Raised when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a quadrature, normalizer or importance-sampling estimate cannot
/// be trusted (divergent integral, non-convergence, degenerate weights).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

/// Writes a rate-limited warning to stderr. Each distinct key is printed at
/// most a handful of times per process; the remaining occurrences are counted.
void warn(const std::string& key, const std::string& message);

/// Number of times `warn` was called with `key`.
long warning_count(const std::string& key);

}  // namespace pdelab
