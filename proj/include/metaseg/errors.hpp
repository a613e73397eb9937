#pragma once

#include <stdexcept>
#include <string>

namespace metaseg {

/// Base class of every error raised by the library. The CLI maps any
/// escaping Error to a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter or longer than the header promises.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyDataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingLabelError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class DegenerateBaselineError : public Error {
 public:
  using Error::Error;
};

}  // namespace metaseg

namespace metaseg {

/// Call inside a catch block: rethrows the active Error with `context`
/// prepended to its message, keeping its concrete type.
[[noreturn]] void rethrow_with_context(const std::string& context);

}  // namespace metaseg
