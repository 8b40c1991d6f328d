#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stochastize {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression, scheme line or rates file entry. `line` is 0 for
/// single-line inputs; `position` is a 0-based column.
class SyntaxError : public Error {
public:
  SyntaxError(std::size_t line, std::size_t position, std::string expected)
      : Error(format(line, position, expected)), line_(line),
        position_(position), expected_(std::move(expected)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

private:
  static std::string format(std::size_t line, std::size_t position,
                            const std::string& expected) {
    std::string where = line > 0 ? "line " + std::to_string(line) + ", " : "";
    return "syntax error at " + where + "column " +
           std::to_string(position + 1) + ": expected " + expected;
  }

  std::size_t line_;
  std::size_t position_;
  std::string expected_;
};

/// A structurally invalid interaction scheme.
class SchemeError : public Error {
public:
  using Error::Error;
};

class DuplicateRateSymbol : public SchemeError {
public:
  explicit DuplicateRateSymbol(const std::string& name)
      : SchemeError("rate symbol '" + name + "' is used more than once"),
        name_(name) {}
  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

class NoOpInteraction : public SchemeError {
public:
  explicit NoOpInteraction(std::size_t line)
      : SchemeError("line " + std::to_string(line) +
                    ": interaction does not change the state"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class EmptyScheme : public SchemeError {
public:
  EmptyScheme() : SchemeError("scheme contains no interactions") {}
};

/// A symbol needed for numeric evaluation has no value.
class MissingSymbol : public Error {
public:
  explicit MissingSymbol(const std::string& name)
      : Error("symbol '" + name + "' is unbound"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

/// One or more rate constants were not given a value.
class UnboundRate : public Error {
public:
  explicit UnboundRate(std::vector<std::string> names)
      : Error(format(names)), names_(std::move(names)) {}
  const std::vector<std::string>& names() const noexcept { return names_; }

private:
  static std::string format(const std::vector<std::string>& names) {
    std::string msg = "unbound rate symbol(s):";
    for (const auto& n : names) msg += " " + n;
    return msg;
  }
  std::vector<std::string> names_;
};

/// A rates file entry that cannot be applied to the scheme: unknown or
/// repeated symbol, negative value, or a species without an initial value.
class BindingError : public Error {
public:
  using Error::Error;
};

class IncompatibleNoise : public Error {
public:
  using Error::Error;
};

class UnstableStep : public Error {
public:
  using Error::Error;
};

class DegenerateDistribution : public Error {
public:
  using Error::Error;
};

class NotPsd : public Error {
public:
  using Error::Error;
};

class NotSymmetric : public Error {
public:
  using Error::Error;
};

class NegativeRate : public Error {
public:
  using Error::Error;
};

class TooFewTrajectories : public Error {
public:
  using Error::Error;
};

}  // namespace stochastize
