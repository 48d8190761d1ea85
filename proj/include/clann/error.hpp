#pragma once

#include <stdexcept>
#include <string>

namespace clann {

// Bad input: malformed files, shape mismatches, invalid configuration.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite losses or parameters during training. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace clann
