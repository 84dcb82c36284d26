#pragma once

#include <stdexcept>
#include <string>

namespace codessm {

/// Shape or length contract violated.
class SizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sequence longer than a fixed positional table allows.
class LengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A NaN or infinity reached a place that must stay finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration document or override.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace codessm
