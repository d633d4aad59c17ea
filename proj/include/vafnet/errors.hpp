#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vafnet {

// Base of every error raised by the library. User-facing errors (bad input,
// bad config) and numeric divergence are distinguished so the CLI can map
// them to different exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class StratificationError : public InputError {
 public:
  using InputError::InputError;
};

class TapeError : public Error {
 public:
  using Error::Error;
};

// Raised by specific VAF initialization when the fit cannot reach tolerance.
class ApproximationError : public Error {
 public:
  ApproximationError(const std::string& what, double max_error)
      : Error(what), max_error_(max_error) {}

  double max_error() const { return max_error_; }

 private:
  double max_error_;
};

// Non-finite gradient or loss. `where` is a parameter index or an epoch
// number depending on the raiser.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t where)
      : Error(what), where_(where) {}

  std::size_t where() const { return where_; }

 private:
  std::size_t where_;
};

}  // namespace vafnet
