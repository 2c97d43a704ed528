#include "unitprior/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace unitprior {

double lq_penalty(std::span<const double> v, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be finite and > 0");
  double sum = 0.0;
  for (double value : v) {
    if (!std::isfinite(value)) throw std::invalid_argument("penalty entries must be finite");
    if (value != 0.0) sum += std::pow(std::abs(value), q);
  }
  return sum;
}

double weight_decay(const WeightSet& weights) {
  double sum = 0.0;
  for (const auto& w : weights.layers) sum += w.squaredNorm();
  return sum;
}

PenaltyBreakdown unit_penalty(std::span<const std::vector<double>> units) {
  if (units.empty()) throw std::invalid_argument("unit penalty needs at least one layer");
  PenaltyBreakdown out;
  for (std::size_t l = 1; l <= units.size(); ++l) {
    const double q = 2.0 / static_cast<double>(l);
    out.exponents.push_back(q);
    out.layer_penalties.push_back(lq_penalty(units[l - 1], q));
    out.total_unit_penalty += out.layer_penalties.back();
  }
  return out;
}

ContourSet contour(double q, double level, std::size_t n_points) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be finite and > 0");
  if (!(level > 0.0) || !std::isfinite(level)) throw std::invalid_argument("level must be finite and > 0");
  if (n_points < 4) throw std::invalid_argument("contour needs at least 4 points");

  ContourSet out{q, level, {}};
  out.points.reserve(n_points);
  const double exponent = 2.0 / q;
  for (std::size_t i = 0; i < n_points; ++i) {
    // Quadrant-exact angles keep the axis points exact.
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_points);
    double c = std::cos(phi);
    double s = std::sin(phi);
    if (4 * i % n_points == 0) {
      const auto quarter = 4 * i / n_points;
      c = quarter == 0 ? 1.0 : quarter == 2 ? -1.0 : 0.0;
      s = quarter == 1 ? 1.0 : quarter == 3 ? -1.0 : 0.0;
    }
    const double x = level * std::copysign(std::pow(std::abs(c), exponent), c);
    const double y = level * std::copysign(std::pow(std::abs(s), exponent), s);
    out.points.push_back({phi, c == 0.0 ? 0.0 : x, s == 0.0 ? 0.0 : y});
  }
  return out;
}

double equal_coordinate_point(double q, double level) { return level * std::exp2(-1.0 / q); }

double lq_radius(double x, double y, double q) {
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  const double m = std::max(ax, ay);
  if (m == 0.0) return 0.0;
  // m (1 + (small/m)^q)^{1/q}, computed through log1p to keep relative accuracy.
  const double small = std::min(ax, ay);
  if (small == 0.0) return m;
  return m * std::exp(std::log1p(std::pow(small / m, q)) / q);
}

}  // namespace unitprior
