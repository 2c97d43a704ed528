#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "unitprior/network.hpp"

namespace unitprior {

/// sum_i |v_i|^q, the q-th power of the L^q (quasi-)norm.
double lq_penalty(std::span<const double> v, double q);

/// Sum of squares of every weight, bias columns included.
double weight_decay(const WeightSet& weights);

struct PenaltyBreakdown {
  /// Layer l contributes sum_m |U_m^{(l)}|^{2/l}.
  std::vector<double> layer_penalties;
  std::vector<double> exponents;
  double total_unit_penalty = 0.0;
  /// The dependence (copula) term of the joint prior is not computed.
  bool copula_term_excluded = true;
};

/// units[l - 1] holds the units of layer l. The scale constant of the
/// tail bound is taken as 1.
PenaltyBreakdown unit_penalty(std::span<const std::vector<double>> units);

struct ContourPoint {
  double phi = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Points of {(x, y) : (|x|^q + |y|^q)^{1/q} = t}.
struct ContourSet {
  double q = 2.0;
  double level = 1.0;
  std::vector<ContourPoint> points;
};

/// Superellipse x = t sgn(cos f)|cos f|^{2/q}, y = t sgn(sin f)|sin f|^{2/q}
/// at n_points equally spaced angles in [0, 2 pi).
ContourSet contour(double q, double level, std::size_t n_points);

/// Coordinate of the contour point with |x| = |y|: t 2^{-1/q}.
double equal_coordinate_point(double q, double level);

/// (|x|^q + |y|^q)^{1/q}, evaluated stably for small q.
double lq_radius(double x, double y, double q);

}  // namespace unitprior
