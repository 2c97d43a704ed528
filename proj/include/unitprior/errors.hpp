#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace unitprior {

// Invalid arguments are reported with std::invalid_argument throughout.

/// All samples are zero, or a tail collapses to too few distinct values.
class DegenerateDistribution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A forward pass produced a non-finite value.
class OverflowError : public std::overflow_error {
 public:
  OverflowError(std::size_t layer, const std::string& what)
      : std::overflow_error(what), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

/// A power of the samples needed by a moment estimate is not representable.
class MomentOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unitprior
