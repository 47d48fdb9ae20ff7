#pragma once

#include <stdexcept>
#include <string>

namespace rdnet {

// CLI exit-code mapping: UsageError -> 1, DataError -> 2, NumericalError -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : DataError {
  using DataError::DataError;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rdnet
