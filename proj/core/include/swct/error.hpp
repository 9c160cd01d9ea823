#pragma once

#include <stdexcept>
#include <string>

namespace swct {

/// Failure classes. The numeric values double as `swct` process exit codes.
enum class ErrorKind { usage = 1, data = 2, algorithm = 3 };

/// Base of every exception thrown by the toolkit. `name()` is a stable
/// snake_case identifier (e.g. "seed_out_of_range") suitable for scripts.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string name, const std::string& message)
      : std::runtime_error(message), kind_(kind), name_(std::move(name)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorKind kind_;
  std::string name_;
};

class UsageError : public Error {
 public:
  UsageError(std::string name, const std::string& message)
      : Error(ErrorKind::usage, std::move(name), message) {}
};

/// Bad input data: malformed files, geometry mismatches, invalid parameters.
class DataError : public Error {
 public:
  DataError(std::string name, const std::string& message)
      : Error(ErrorKind::data, std::move(name), message) {}
};

/// An algorithm could not produce a trustworthy result (e.g. growth leak).
class AlgorithmError : public Error {
 public:
  AlgorithmError(std::string name, const std::string& message)
      : Error(ErrorKind::algorithm, std::move(name), message) {}
};

}  // namespace swct
