#pragma once

#include <stdexcept>
#include <string>

namespace fairsel {

// Bad parameters or malformed requests (CLI exit 1, HTTP 400).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that cannot be processed (CLI exit 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The balancer cannot honour the request on this data (HTTP 422).
class BalanceError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace fairsel
