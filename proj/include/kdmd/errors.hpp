#pragma once

#include <stdexcept>
#include <string>

namespace kdmd {

/// Failure categories; each maps onto one CLI exit code.
enum class ErrorKind {
  invalid_argument,  // bad option or precondition violation (exit 2)
  numerical,         // rank deficiency, defective eigenproblem (exit 3)
  format,            // malformed or inconsistent input file (exit 4)
  io,                // filesystem failure (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::invalid_argument, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::numerical: return 3;
    case ErrorKind::format:
    case ErrorKind::io: return 4;
  }
  return 1;
}

}  // namespace kdmd
