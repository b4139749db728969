#pragma once

#include <stdexcept>
#include <string>

namespace rcbc {

/// Malformed or inconsistent input data (empty matrix, shape mismatch, non-finite entry).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A tuning or solver parameter outside its admissible range.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

/// Robust scale estimate is zero, so scale-derived defaults are undefined.
class DegenerateScale : public std::domain_error {
 public:
  explicit DegenerateScale(const std::string& what) : std::domain_error(what) {}
};

}  // namespace rcbc
