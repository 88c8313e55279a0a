#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shapenergy {

// Root of every error thrown by the library. Subclasses only exist so
// callers (tests, CLI exit-code mapping, HTTP status mapping) can tell the
// failure classes apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside its admissible interval.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Degenerate polygon, tensor shape mismatch, etc.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Footprint does not fit the raster world window.
class WindowError : public Error {
 public:
  using Error::Error;
};

// Malformed binary file (PGM, checkpoint payload). Carries the byte offset.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Malformed text input (EPW, CSV). Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid model architecture request.
class SpecError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Dataset / checkpoint directory failed validation.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition not covered above.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapenergy
