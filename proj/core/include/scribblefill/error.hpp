#pragma once

#include <stdexcept>
#include <string>

namespace scribblefill {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated precondition, dimension mismatch, malformed config.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file / byte stream.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Linear solve did not reach the requested tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace scribblefill
