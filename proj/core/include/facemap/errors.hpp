#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facemap {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Structural misuse: bad ids, counts, ranges, incompatible dimensions.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular systems, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A vector too close to zero to normalize or compare by angle.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. Carries a 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Unrecognized or incompatible file headers (magic bytes, version fields).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace facemap
