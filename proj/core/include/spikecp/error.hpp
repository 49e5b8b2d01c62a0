#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spikecp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions disagree with the network or dataset.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates an operation's precondition (range, finiteness, ordering).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Malformed text file. Carries the 1-based line and the field being read.
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, std::string field, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + field + ": " + what),
        path_(std::move(path)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string path_;
  std::size_t line_;
  std::string field_;
};

/// File header names an unsupported format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spikecp
