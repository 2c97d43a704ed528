#include "unitprior/survival_curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "unitprior/errors.hpp"

namespace unitprior {

namespace {

constexpr double kNormalQ75 = 0.6744897501960817;

}  // namespace

double log_interquartile_range(std::span<const SignedLog> samples) {
  if (samples.size() < 4) throw std::invalid_argument("interquartile range needs at least 4 samples");
  std::vector<SignedLog> sorted(samples.begin(), samples.end());
  const auto at = [&](double p) {
    const auto idx = static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end(), value_less);
    return sorted[idx];
  };
  const auto lo = at(0.25);
  const auto hi = at(0.75);
  double ref = -std::numeric_limits<double>::infinity();
  for (const auto& v : {lo, hi}) {
    if (v.sign != 0) ref = std::max(ref, v.log_magnitude);
  }
  if (!std::isfinite(ref)) throw DegenerateDistribution("interquartile range is zero");
  const auto rel = [&](const SignedLog& v) { return v.sign == 0 ? 0.0 : v.sign * std::exp(v.log_magnitude - ref); };
  const double width = rel(hi) - rel(lo);
  if (!(width > 0.0)) throw DegenerateDistribution("interquartile range is zero");
  return ref + std::log(width);
}

SurvivalCurves survival_curves(std::span<const UnitSampleSet> samples, bool standardize, std::size_t grid_points) {
  if (samples.empty()) throw std::invalid_argument("no sample sets given");
  if (grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");

  SurvivalCurves out;
  out.standardized = standardize;
  std::vector<std::vector<double>> positive_logs;
  double max_log = -std::numeric_limits<double>::infinity();
  for (const auto& set : samples) {
    SurvivalCurve curve;
    curve.layer = set.layer;
    curve.log_scale = standardize ? log_interquartile_range(set.values) : 0.0;
    std::vector<double> logs;
    for (const auto& v : set.values) {
      if (v.sign > 0) logs.push_back(v.log_magnitude - curve.log_scale);
    }
    if (logs.empty()) throw DegenerateDistribution("layer " + std::to_string(set.layer) + " has no positive samples");
    std::sort(logs.begin(), logs.end());
    max_log = std::max(max_log, logs.back());
    curve.n_positive = logs.size();
    positive_logs.push_back(std::move(logs));
    out.curves.push_back(std::move(curve));
  }
  const double x_max = std::exp(max_log);
  if (!std::isfinite(x_max)) {
    throw OverflowError(0, "sample magnitudes exceed double range; rerun with standardization");
  }

  out.grid.resize(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    out.grid[i] = x_max * static_cast<double>(i) / static_cast<double>(grid_points - 1);
  }
  for (std::size_t c = 0; c < out.curves.size(); ++c) {
    const auto& logs = positive_logs[c];
    const double n = static_cast<double>(logs.size());
    auto& curve = out.curves[c];
    curve.log_survival.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
      const double x = out.grid[i];
      const auto above = x > 0.0 ? static_cast<double>(logs.end() - std::upper_bound(logs.begin(), logs.end(), std::log(x)))
                                 : n;
      curve.log_survival[i] = std::log(above / n);
    }
  }
  return out;
}

double gaussian_standardized_log_survival(double x) {
  return std::log(std::erfc(2.0 * kNormalQ75 * x / std::numbers::sqrt2));
}

std::size_t quantile_grid_index(const SurvivalCurves& curves, std::size_t curve, double level) {
  const auto& ls = curves.curves.at(curve).log_survival;
  const double target = std::log(level);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (ls[i] <= target) return i;
  }
  return ls.size();
}

std::vector<OrderingCheck> ordering_checks(const SurvivalCurves& curves, double level) {
  std::vector<OrderingCheck> out;
  for (std::size_t c = 0; c + 1 < curves.curves.size(); ++c) {
    const auto idx = quantile_grid_index(curves, c, level);
    OrderingCheck check;
    check.layer_a = curves.curves[c].layer;
    check.layer_b = curves.curves[c + 1].layer;
    if (idx < curves.grid.size()) {
      check.x = curves.grid[idx];
      check.log_survival_a = curves.curves[c].log_survival[idx];
      check.log_survival_b = curves.curves[c + 1].log_survival[idx];
      check.passed = check.log_survival_b > check.log_survival_a;
    }
    out.push_back(check);
  }
  return out;
}

GaussianBandCheck gaussian_band_check(const SurvivalCurves& curves, std::size_t curve, double z_limit,
                                      double min_survival) {
  if (!curves.standardized) throw std::invalid_argument("the Gaussian reference needs standardized curves");
  const auto& c = curves.curves.at(curve);
  const double n = static_cast<double>(c.n_positive);
  GaussianBandCheck check;
  for (std::size_t i = 0; i < curves.grid.size(); ++i) {
    const double empirical = std::exp(c.log_survival[i]);
    if (empirical < min_survival) continue;
    const double reference = std::exp(gaussian_standardized_log_survival(curves.grid[i]));
    const double se = std::sqrt(reference * (1.0 - reference) / n);
    ++check.points_checked;
    if (se == 0.0) {
      if (empirical != reference) {
        check.max_abs_z = std::numeric_limits<double>::infinity();
        check.worst_x = curves.grid[i];
      }
      continue;
    }
    const double z = std::abs(empirical - reference) / se;
    if (z > check.max_abs_z) {
      check.max_abs_z = z;
      check.worst_x = curves.grid[i];
    }
  }
  check.passed = check.points_checked > 0 && check.max_abs_z <= z_limit;
  return check;
}

}  // namespace unitprior
