#pragma once

#include <stdexcept>
#include <string>

namespace cft {

// Bad or inconsistent parameters, detected at load or validate time.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside a function's mathematical domain (d <= 0, mu <= 0, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Two vehicles are not connected when the caller assumed they were.
struct OutOfRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cft
