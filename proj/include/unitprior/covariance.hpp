#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unitprior/network.hpp"

namespace unitprior {

enum class CovarianceVerdict { NonnegativeConsistent, ZeroConsistent, Violation };

std::string_view to_string(CovarianceVerdict verdict) noexcept;

struct UnitPair {
  std::size_t first = 0;
  std::size_t second = 1;

  friend bool operator==(const UnitPair&, const UnitPair&) = default;
};

struct PowerPair {
  int s = 1;
  int t = 1;
};

/// Monte-Carlo estimate of Cov[h_m^s, h_m'^t] with a batch-means standard
/// error. Violation only when estimate < -3 se; zero-consistent when
/// |estimate| <= 3 se.
struct CovarianceReport {
  std::size_t layer = 1;
  UnitPair pair;
  PowerPair powers;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_batches = 0;
  CovarianceVerdict verdict = CovarianceVerdict::ZeroConsistent;
};

inline constexpr double kVerdictSigmas = 3.0;
inline constexpr std::size_t kDefaultBatches = 100;

CovarianceVerdict classify_covariance(double estimate, double se) noexcept;

/// Covariance of powers of two jointly drawn sample sets. Throws
/// MomentOverflow when a (2s)-th or (2t)-th power is not representable.
CovarianceReport covariance_from_samples(const UnitSampleSet& a, const UnitSampleSet& b, PowerPair powers,
                                         std::size_t n_batches = kDefaultBatches);

/// Samples the pair (post-nonlinearity by default) under fresh weights and
/// estimates their covariance. Requires n_samples >= 10^4 and distinct units.
CovarianceReport estimate_unit_covariance(const NetworkConfig& config, std::span<const double> x, std::size_t layer,
                                          UnitPair pair, PowerPair powers, std::size_t n_samples,
                                          std::uint64_t seed, const SamplingOptions& options = {},
                                          UnitKind kind = UnitKind::Post);

struct SweepCell {
  std::size_t layer = 1;
  PowerPair powers;
  std::optional<CovarianceReport> report;
  std::string error;  // set when the cell failed
};

struct SweepSummary {
  std::size_t nonnegative = 0;
  std::size_t zero = 0;
  std::size_t violations = 0;
  std::size_t errors = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  SweepSummary summary;
};

/// Every (layer, powers) cell, layer-major. All cells of a layer share one
/// joint draw (identical to estimate_unit_covariance with the same seed).
/// Per-cell failures are recorded and the sweep continues.
SweepResult sweep(const NetworkConfig& config, std::span<const double> x, std::span<const std::size_t> layers,
                  std::span<const PowerPair> powers, std::size_t n_samples, std::uint64_t seed,
                  UnitPair pair = {}, const SamplingOptions& options = {}, UnitKind kind = UnitKind::Post);

}  // namespace unitprior
