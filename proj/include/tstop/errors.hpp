#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tstop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Formula text could not be parsed. `position()` is a 0-based offset into
/// the source text.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// An argument lies outside the domain where the quantity is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent problem input. `field()` names the offending
/// key path (e.g. "payoff.piece.1.formula") when one is known.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string field = {})
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The configuration is valid but the requested construction does not exist
/// for it (e.g. no positive decreasing fundamental solution).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to meet its tolerance or produced a
/// non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tstop
