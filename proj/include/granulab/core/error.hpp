#pragma once

#include <stdexcept>
#include <string>

namespace granulab {

enum class ErrorKind {
  validation,  // bad arguments or configuration
  data,        // malformed or inconsistent input data
  io,          // filesystem and serialization failures
  numerical,   // divergence, failed fits, degenerate linear algebra
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(ErrorKind::validation, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorKind::io, msg) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(ErrorKind::numerical, msg) {}
};

// Simulation blew up (non-finite state or absurd speeds).
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Depth image had no foreground pixels to work with.
class EmptySegmentationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace granulab
