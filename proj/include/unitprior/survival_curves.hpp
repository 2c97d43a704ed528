#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "unitprior/network.hpp"

namespace unitprior {

/// log P(X > x | X > 0) of one layer's pre-nonlinearity sample on a grid.
struct SurvivalCurve {
  std::size_t layer = 1;
  /// log of the divisor applied before evaluation (the sample's
  /// interquartile range when standardizing, 0 otherwise).
  double log_scale = 0.0;
  std::size_t n_positive = 0;
  std::vector<double> log_survival;  // one entry per grid point, -inf past the sample maximum
};

struct SurvivalCurves {
  bool standardized = true;
  std::vector<double> grid;
  std::vector<SurvivalCurve> curves;
};

/// Interquartile range of a sample, returned as its natural log.
double log_interquartile_range(std::span<const SignedLog> samples);

/// Positive-half log-survival curves on a common grid [0, max x], with
/// `grid_points` equally spaced points. Optionally divides each sample by
/// its interquartile range first.
SurvivalCurves survival_curves(std::span<const UnitSampleSet> samples, bool standardize, std::size_t grid_points);

/// log-survival of the positive half of N(0, s^2) divided by its
/// population interquartile range, at standardized x.
double gaussian_standardized_log_survival(double x);

/// First grid index where the curve's survival drops to `level` or below
/// (its upper (1 - level) quantile on the grid); grid.size() if never.
std::size_t quantile_grid_index(const SurvivalCurves& curves, std::size_t curve, double level);

struct OrderingCheck {
  std::size_t layer_a = 0;  // shallower
  std::size_t layer_b = 0;  // deeper
  double x = 0.0;
  double log_survival_a = 0.0;
  double log_survival_b = 0.0;
  bool passed = false;
};

/// For each consecutive pair of curves (in the given order), compares
/// log-survival at the shallower curve's upper-`level` quantile grid point;
/// passes iff the deeper curve is strictly larger there.
std::vector<OrderingCheck> ordering_checks(const SurvivalCurves& curves, double level = 1e-3);

struct GaussianBandCheck {
  std::size_t points_checked = 0;
  double max_abs_z = 0.0;
  double worst_x = 0.0;
  bool passed = false;
};

/// Compares a standardized curve with the Gaussian reference at every grid
/// point whose empirical survival is at least `min_survival`, using a
/// binomial standard error; passes iff every |z| <= `z_limit`.
GaussianBandCheck gaussian_band_check(const SurvivalCurves& curves, std::size_t curve, double z_limit = 4.0,
                                      double min_survival = 1e-3);

}  // namespace unitprior
