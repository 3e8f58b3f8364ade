#pragma once

#include <stdexcept>

namespace vfa {

// Invalid arithmetic inputs or results: non-finite operands, division by
// zero, conversions outside the signed 32-bit range. CLI maps this to exit 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or mismatched shapes. CLI maps this to exit 1.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace vfa
