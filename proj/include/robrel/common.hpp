#pragma once

#include <stdexcept>
#include <string>

namespace robrel {

// Bad input: malformed documents, violated model invariants, out-of-range
// arguments. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown: normalization failure, non-convergent quadrature.
// CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace robrel
