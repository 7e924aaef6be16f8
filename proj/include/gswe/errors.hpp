#pragma once

#include <stdexcept>

namespace gswe {

// Raised when a value leaves the finite range (NaN/Inf) or a numeric
// computation cannot continue.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised for malformed or inconsistent files and datasets.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gswe
