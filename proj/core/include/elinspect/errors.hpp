#pragma once

#include <stdexcept>
#include <string>

namespace elinspect {

/// Bad configuration or illegal parameter combination (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable, malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside a solver or transform (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace elinspect
