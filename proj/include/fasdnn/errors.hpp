#pragma once

#include <stdexcept>
#include <string>

namespace fasdnn {

// Every failure raised by the library derives from Error. The CLI maps the
// concrete type onto an exit code, so keep the hierarchy flat and stable.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions disagree.
class ShapeError : public Error {
public:
  using Error::Error;
};

// A NaN or Inf was about to enter or leave a numeric operation.
class NonFiniteError : public Error {
public:
  using Error::Error;
};

// Invalid network or experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// An operation was called outside its contract (e.g. wrong activation kind).
class ContractError : public Error {
public:
  using Error::Error;
};

// An object was used before it was ready (e.g. an unfitted normalizer).
class StateError : public Error {
public:
  using Error::Error;
};

// Bad dataset contents: labels, class counts, row counts.
class DataError : public Error {
public:
  using Error::Error;
};

// Malformed CSV cell; message carries the row/column.
class ParseError : public DataError {
public:
  using DataError::DataError;
};

// Column count disagrees with the battery schema.
class SchemaError : public DataError {
public:
  using DataError::DataError;
};

// A named feature does not exist.
class LookupError : public DataError {
public:
  using DataError::DataError;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ReportError : public Error {
public:
  using Error::Error;
};

} // namespace fasdnn
