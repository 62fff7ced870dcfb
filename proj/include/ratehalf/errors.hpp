#pragma once

#include <stdexcept>
#include <string>

namespace ratehalf {

// Invalid or out-of-range experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric procedure could not produce a result, e.g. no sign change in a
// root bracket or an unreachable calibration target (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failure while writing results (CLI exit code 1).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ratehalf
