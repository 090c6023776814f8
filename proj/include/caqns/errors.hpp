#pragma once

#include <stdexcept>
#include <string>

namespace caqns {

// Bad user input: malformed config, invalid ranges, unsupported combinations.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: rank deficiency, non-convergence, overflow.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace caqns
