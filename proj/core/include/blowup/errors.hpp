#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

// Raised when an input description of the target geometry is malformed or
// violates a structural precondition (exit code 1 at the CLI boundary).
class invalid_profile_error : public std::runtime_error {
 public:
  explicit invalid_profile_error(const std::string& what_arg)
      : std::runtime_error(what_arg) {}
};

// Raised when an algorithm cannot meet its accuracy contract: step-size
// underflow, quadrature non-convergence, mismatched analytic branches,
// NaN detection (exit code 2 at the CLI boundary).
class numerical_fault : public std::runtime_error {
 public:
  explicit numerical_fault(const std::string& what_arg)
      : std::runtime_error(what_arg) {}
};

}  // namespace blowup
