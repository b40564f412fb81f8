#pragma once

#include <stdexcept>
#include <string>

namespace rslimits {

// Malformed or out-of-contract input (dimension mismatch, non-PSD matrix,
// bad prior, schema violation). The CLI maps this to exit status 1.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine produced a non-finite value or could not complete.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rslimits
