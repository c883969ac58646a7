#pragma once

#include <stdexcept>
#include <string>

namespace sscb {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGridError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class CalibrationInfeasibleError : public Error {
 public:
  using Error::Error;
};

class ContractViolationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sscb
