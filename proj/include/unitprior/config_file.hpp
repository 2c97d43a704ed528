#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "unitprior/network.hpp"

namespace unitprior {

// Key-value config files, one `key = value` per line, `#` starts a comment.
//
//   input_dim            positive integer                      (required)
//   layer_widths         comma-separated positive integers     (required)
//   nonlinearity         relu | prelu | elu | selu | tanh | sigmoid | identity
//                        (default relu)
//   nonlinearity_params  comma-separated reals, family order   (prelu: alpha;
//                        elu: alpha; selu: lambda, alpha)
//   weight_std           one positive real, or one per layer   (default 1)
//   include_bias         true | false                          (default false)
//   seed                 unsigned 64-bit integer               (default 0)
//   input_seed           unsigned 64-bit integer; seeds the fixed input x
//                        (default: seed)
//
// Unknown keys and duplicate keys are errors.

struct ExperimentConfig {
  NetworkConfig network;
  std::uint64_t input_seed = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws ConfigError with the offending line on malformed input.
ExperimentConfig parse_config(std::string_view text);

/// Throws ConfigError if the file is missing or malformed.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

/// Canonical text of the network part only (used for hashing).
std::string format_network(const NetworkConfig& config);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace unitprior
