#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polsynth {

/// Syntax error in policy DSL text. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Malformed or wrong-version serialized document.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trees, parameters or observations that belong to different domains.
class DictionaryMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A token that does not resolve in the predicate dictionary.
class UnknownToken : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace polsynth
