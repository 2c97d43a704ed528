#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unitprior/nonlinearity.hpp"

namespace unitprior {

/// Feed-forward architecture with an i.i.d. zero-mean Gaussian weight prior.
struct NetworkConfig {
  std::size_t input_dim = 1;
  std::vector<std::size_t> layer_widths;
  NonlinearitySpec nonlinearity = NonlinearitySpec::relu();
  /// One global prior standard deviation, or one per layer.
  std::vector<double> weight_std{1.0};
  /// Appends a constant input 1 to every layer; its weight shares the prior.
  bool include_bias = false;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on any broken invariant.
  void validate() const;

  std::size_t depth() const noexcept { return layer_widths.size(); }
  /// Width of layer `layer` (1-based); layer 0 is the input.
  std::size_t width(std::size_t layer) const;
  /// Prior standard deviation of layer `layer` (1-based).
  double weight_std_at(std::size_t layer) const;
  /// Columns of W^{(layer)}: previous width plus the bias column.
  std::size_t fan_in(std::size_t layer) const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// One weight matrix per layer, H_l x (H_{l-1} + bias), bias last.
struct WeightSet {
  std::vector<Eigen::MatrixXd> layers;
};

struct LayerActivations {
  Eigen::VectorXd pre;   // g^{(l)}
  Eigen::VectorXd post;  // h^{(l)} = phi(g^{(l)})
};

enum class UnitKind { Pre, Post };

std::string_view to_string(UnitKind kind) noexcept;
UnitKind parse_unit_kind(std::string_view text);

/// Sign and natural log of the magnitude; zero is (0, -inf).
struct SignedLog {
  std::int8_t sign = 0;
  double log_magnitude = 0.0;

  static SignedLog from_value(double value) noexcept;
  double value() const noexcept;

  friend bool operator==(const SignedLog&, const SignedLog&) = default;
};

/// Strict weak order matching the order of the represented values.
bool value_less(const SignedLog& a, const SignedLog& b) noexcept;

struct Provenance {
  std::string config_hash;
  std::string input_hash;
  std::uint64_t seed = 0;
  std::string sampler;
  std::size_t chunk_size = 0;
  /// Per-layer log of the rescaling constants applied during propagation
  /// (all zero when rescaling is off). Stored magnitudes are unscaled.
  std::vector<double> log_rescale;
};

/// Monte-Carlo draws of one unit, in sign/log-magnitude form.
struct UnitSampleSet {
  std::size_t layer = 1;
  UnitKind kind = UnitKind::Pre;
  std::size_t unit_index = 0;
  std::vector<SignedLog> values;
  Provenance provenance;

  std::size_t n_samples() const noexcept { return values.size(); }
  std::vector<double> decoded() const;
};

enum class SamplerKind {
  /// Materialises the weight rows each sample needs and multiplies.
  ExplicitWeights,
  /// Draws g^{(l)} = sigma_l * sqrt(|h^{(l-1)}|^2 + bias) * Z directly, which
  /// is the exact conditional law of a Gaussian-weight layer.
  Collapsed,
};

std::string_view to_string(SamplerKind kind) noexcept;
SamplerKind parse_sampler_kind(std::string_view text);

enum class RescaleMode { Auto, On, Off };

std::string_view to_string(RescaleMode mode) noexcept;
RescaleMode parse_rescale_mode(std::string_view text);

struct SamplingOptions {
  SamplerKind sampler = SamplerKind::Collapsed;
  std::size_t chunk_size = 4096;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
  /// Auto rescales only positively homogeneous nonlinearities, for which it
  /// is an exact change of units.
  RescaleMode rescale = RescaleMode::Auto;

  friend bool operator==(const SamplingOptions&, const SamplingOptions&) = default;
};

struct UnitProbe {
  std::size_t layer = 1;
  std::size_t unit = 0;
  UnitKind kind = UnitKind::Pre;
};

/// i.i.d. standard normal input of length `dim`.
std::vector<double> sample_input(std::size_t dim, std::uint64_t seed);

/// Draws every weight from N(0, sigma_l^2). Row r of layer l comes from its
/// own keyed stream, so any subset of rows can be regenerated alone.
WeightSet sample_weights(const NetworkConfig& config, std::uint64_t seed);

/// Forward propagation of a fixed input. Throws OverflowError naming the
/// first layer with a non-finite value.
std::vector<LayerActivations> forward(const WeightSet& weights, std::span<const double> x,
                                      const NetworkConfig& config);

/// Jointly samples several units: sample i of every returned set comes
/// from the same weight draw. Output order matches `probes`.
std::vector<UnitSampleSet> sample_probes(const NetworkConfig& config, std::span<const double> x,
                                         std::span<const UnitProbe> probes, std::size_t n_samples,
                                         std::uint64_t seed, const SamplingOptions& options = {});

/// n independent draws of one unit, each under a fresh weight set.
UnitSampleSet sample_units(const NetworkConfig& config, std::span<const double> x, std::size_t layer,
                           std::size_t unit_index, UnitKind kind, std::size_t n_samples,
                           std::uint64_t seed, const SamplingOptions& options = {});

/// Hex digests used in provenance records.
std::string hash_config(const NetworkConfig& config);
std::string hash_input(std::span<const double> x);

}  // namespace unitprior
