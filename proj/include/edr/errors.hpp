#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `location()` is a 1-based line number for files and
/// a 0-based character offset for single expressions.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

/// Well-formed data that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter; `field()` names the offending parameter.
class ParamError : public Error {
 public:
  ParamError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A required input file does not exist or cannot be opened.
class FileError : public Error {
 public:
  using Error::Error;
};

}  // namespace edr
