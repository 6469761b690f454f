#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contagion {

// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class InsolventBankError : public Error {
 public:
  InsolventBankError(const std::string& what, std::string bank_id)
      : Error(what), bank_id_(std::move(bank_id)) {}

  const std::string& bank_id() const noexcept { return bank_id_; }

 private:
  std::string bank_id_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class RealizationError : public Error {
 public:
  RealizationError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace contagion
