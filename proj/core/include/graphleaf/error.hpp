#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace graphleaf {

/// Base of every error raised by the library. `category()` is the short
/// machine-readable tag printed by the CLI as `error: <category>: <detail>`.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept = 0;
};

/// Caller supplied something that violates a precondition.
class InputError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "input"; }
};

/// An image file could not be decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "decode"; }
};

/// A file has the wrong magic bytes or an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "format"; }
};

/// A file ended early or carries inconsistent payload.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  const char* category() const noexcept override { return "corruption"; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io"; }
};

/// Non-finite value encountered during optimisation.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "numeric"; }
};

}  // namespace graphleaf
