#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sqlinsight {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(message + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnsupportedStatement : public Error {
 public:
  using Error::Error;
};

class IrrecomposableSketch : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class ConnectionError : public Error {
 public:
  using Error::Error;
};

class PermissionError : public Error {
 public:
  using Error::Error;
};

/// Malformed schema, instruction or config file. Carries a location hint.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnknownElement : public Error {
 public:
  using Error::Error;
};

class DuplicateExample : public Error {
 public:
  using Error::Error;
};

class InvalidExample : public Error {
 public:
  using Error::Error;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CorruptSnapshot : public Error {
 public:
  using Error::Error;
};

class UnparsableGeneration : public Error {
 public:
  using Error::Error;
};

class UnknownRequest : public Error {
 public:
  using Error::Error;
};

class InvalidCorrection : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sqlinsight
