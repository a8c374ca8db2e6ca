#pragma once

#include <stdexcept>
#include <string>

namespace demandcast {

// Shape disagreement between operands. Always a programming or wiring error.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed, inconsistent or insufficient input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric could not be evaluated on the given series (e.g. near-zero actuals for MAPE).
class MetricError : public DataError {
 public:
  using DataError::DataError;
};

// Training or evaluation produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace demandcast
