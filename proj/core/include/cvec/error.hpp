#pragma once

#include <stdexcept>
#include <string>

namespace cvec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not satisfy an operation's requirements.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A call violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A forward value became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Missing or unusable trained model.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace cvec
