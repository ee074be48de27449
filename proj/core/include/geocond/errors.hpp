#pragma once

#include <stdexcept>
#include <string>

namespace geocond {

inline constexpr const char* kVersion = "0.1.0";

/// Bad user input: malformed files, out-of-range values, inconsistent
/// configuration. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical or runtime failure after validation passed (non-finite loss,
/// calibration that cannot converge). CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace geocond
