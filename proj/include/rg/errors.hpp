#pragma once
#include <stdexcept>

namespace rg {

// Bad user input: malformed config, unsupported parameter combination.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runtime numerical failure: divergence, loss of invertibility, overflow.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A requested cross-check did not hold.
struct verification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace rg
