#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace revsent {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  /// Short machine-readable category, used by the CLI error line.
  virtual const char* kind() const noexcept { return "error"; }
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// A malformed file or a data row that violates a record invariant.
class DataError : public Error {
public:
  explicit DataError(const std::string& what, std::size_t row = npos)
      : Error(row == npos ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}
  const char* kind() const noexcept override { return "data"; }
  std::size_t row() const noexcept { return row_; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::size_t row_;
};

/// An invalid configuration value; key() names the offending setting.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const char* kind() const noexcept override { return "config"; }
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

class ShapeError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Non-finite loss or gradient during training.
class NumericError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

}  // namespace revsent
