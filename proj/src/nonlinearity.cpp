#include "unitprior/nonlinearity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace unitprior {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Relative slack for comparing |phi(u)| against a linear bound computed
// from the same floating-point values.
constexpr double kSlack = 1e-12;

double sup_abs_where(const std::vector<double>& grid, const NonlinearitySpec& spec,
                     double lo, double hi, Side side) {
  double sup = 0.0;
  for (double u : grid) {
    const double m = std::abs(u);
    if (m < lo || m > hi) continue;
    if ((side == Side::PositiveAxis) != (u > 0.0)) continue;
    sup = std::max(sup, std::abs(spec(u)));
  }
  return sup;
}

}  // namespace

NonlinearitySpec NonlinearitySpec::relu() { return {Family::ReLU, 0.0, 0.0}; }

NonlinearitySpec NonlinearitySpec::prelu(double alpha) {
  require(std::isfinite(alpha) && alpha >= 0.0, "prelu slope must be finite and >= 0");
  return {Family::PReLU, alpha, 0.0};
}

NonlinearitySpec NonlinearitySpec::elu(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0, "elu alpha must be finite and > 0");
  return {Family::ELU, alpha, 0.0};
}

NonlinearitySpec NonlinearitySpec::selu(double lambda, double alpha) {
  require(std::isfinite(lambda) && lambda > 0.0, "selu lambda must be finite and > 0");
  require(std::isfinite(alpha) && alpha > 0.0, "selu alpha must be finite and > 0");
  return {Family::SELU, lambda, alpha};
}

NonlinearitySpec NonlinearitySpec::tanh() { return {Family::Tanh, 0.0, 0.0}; }
NonlinearitySpec NonlinearitySpec::sigmoid() { return {Family::Sigmoid, 0.0, 0.0}; }
NonlinearitySpec NonlinearitySpec::identity() { return {Family::Identity, 0.0, 0.0}; }

NonlinearitySpec NonlinearitySpec::parse(std::string_view name, std::span<const double> params) {
  auto expect_at_most = [&](std::size_t n) {
    if (params.size() > n) {
      throw std::invalid_argument("too many parameters for nonlinearity '" + std::string(name) + "'");
    }
  };
  if (name == "relu") {
    expect_at_most(0);
    return relu();
  }
  if (name == "prelu") {
    expect_at_most(1);
    require(params.size() == 1, "prelu needs its negative-side slope");
    return prelu(params[0]);
  }
  if (name == "elu") {
    expect_at_most(1);
    return params.empty() ? elu() : elu(params[0]);
  }
  if (name == "selu") {
    expect_at_most(2);
    if (params.empty()) return selu();
    if (params.size() == 1) return selu(params[0]);
    return selu(params[0], params[1]);
  }
  if (name == "tanh") {
    expect_at_most(0);
    return tanh();
  }
  if (name == "sigmoid") {
    expect_at_most(0);
    return sigmoid();
  }
  if (name == "identity") {
    expect_at_most(0);
    return identity();
  }
  throw std::invalid_argument("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view NonlinearitySpec::name() const noexcept {
  switch (family_) {
    case Family::ReLU: return "relu";
    case Family::PReLU: return "prelu";
    case Family::ELU: return "elu";
    case Family::SELU: return "selu";
    case Family::Tanh: return "tanh";
    case Family::Sigmoid: return "sigmoid";
    case Family::Identity: return "identity";
  }
  return "unknown";
}

std::vector<double> NonlinearitySpec::params() const {
  switch (family_) {
    case Family::PReLU:
    case Family::ELU: return {a_};
    case Family::SELU: return {a_, b_};
    default: return {};
  }
}

std::string NonlinearitySpec::to_string() const {
  std::ostringstream out;
  out << name();
  const auto p = params();
  if (!p.empty()) {
    out << '(';
    for (std::size_t i = 0; i < p.size(); ++i) {
      char buf[32];
      const auto end = std::to_chars(buf, buf + sizeof buf, p[i]).ptr;
      out << (i ? "," : "") << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << ')';
  }
  return out.str();
}

bool NonlinearitySpec::positively_homogeneous() const noexcept {
  return family_ == Family::ReLU || family_ == Family::PReLU || family_ == Family::Identity;
}

double NonlinearitySpec::operator()(double u) const noexcept {
  switch (family_) {
    case Family::ReLU: return u > 0.0 ? u : 0.0;
    case Family::PReLU: return u > 0.0 ? u : a_ * u;
    case Family::ELU: return u > 0.0 ? u : a_ * std::expm1(u);
    case Family::SELU: return u > 0.0 ? a_ * u : a_ * b_ * std::expm1(u);
    case Family::Tanh: return std::tanh(u);
    case Family::Sigmoid: return 1.0 / (1.0 + std::exp(-u));
    case Family::Identity: return u;
  }
  return u;
}

double apply(const NonlinearitySpec& spec, double u) {
  require(std::isfinite(u), "nonlinearity argument must be finite");
  return spec(u);
}

std::string_view to_string(Side side) noexcept {
  return side == Side::PositiveAxis ? "positive-axis" : "negative-axis";
}

std::string_view to_string(Inequality which) noexcept {
  return which == Inequality::Lower ? "lower" : "upper";
}

std::string_view to_string(EnvelopeOutcome outcome) noexcept {
  switch (outcome) {
    case EnvelopeOutcome::Holds: return "holds";
    case EnvelopeOutcome::Bounded: return "bounded";
    case EnvelopeOutcome::Fails: return "fails";
  }
  return "fails";
}

std::vector<double> EnvelopeGrid::points() const {
  require(min_magnitude > 0.0 && min_magnitude < max_magnitude, "grid magnitudes must satisfy 0 < min < max");
  require(max_magnitude >= 100.0, "grid must reach |u| >= 100");
  require(2 * points_per_sign + 1 >= 10000, "grid must hold at least 10^4 points");

  const double log_lo = std::log(min_magnitude);
  const double step = (std::log(max_magnitude) - log_lo) / static_cast<double>(points_per_sign - 1);
  std::vector<double> magnitudes(points_per_sign);
  for (std::size_t i = 0; i < points_per_sign; ++i) {
    magnitudes[i] = std::exp(log_lo + step * static_cast<double>(i));
  }
  magnitudes.back() = max_magnitude;

  std::vector<double> grid;
  grid.reserve(2 * points_per_sign + 1);
  for (auto it = magnitudes.rbegin(); it != magnitudes.rend(); ++it) grid.push_back(-*it);
  grid.push_back(0.0);
  grid.insert(grid.end(), magnitudes.begin(), magnitudes.end());
  return grid;
}

EnvelopeWitness verify_envelope(const NonlinearitySpec& spec, const EnvelopeConstants& c,
                                const EnvelopeGrid& grid) {
  require(c.c1 >= 0.0 && c.c2 >= 0.0, "envelope offsets must be >= 0");
  require(c.d1 > 0.0 && c.d2 > 0.0, "envelope slopes must be > 0");

  EnvelopeWitness witness{c, grid, std::nullopt};
  for (double u : grid.points()) {
    const double value = std::abs(spec(u));
    const double m = std::abs(u);
    const bool on_side = c.side == Side::PositiveAxis ? u >= 0.0 : u <= 0.0;
    if (on_side) {
      const double lower = c.c1 + c.d1 * m;
      if (value < lower * (1.0 - kSlack)) {
        witness.violation = EnvelopeViolation{u, Inequality::Lower};
        return witness;
      }
    }
    const double upper = c.c2 + c.d2 * m;
    if (value > upper * (1.0 + kSlack) + kSlack) {
      witness.violation = EnvelopeViolation{u, Inequality::Upper};
      return witness;
    }
  }
  return witness;
}

EnvelopeSearch search_envelope_constants(const NonlinearitySpec& spec, const EnvelopeGrid& grid,
                                         double min_slope) {
  const auto points = grid.points();
  const double radius = grid.max_magnitude;
  const double inner = radius / 10.0;

  EnvelopeSearch result;
  for (double u : points) result.sup_abs = std::max(result.sup_abs, std::abs(spec(u)));

  auto outer_slope = [&](Side side) {
    const double outer = sup_abs_where(points, spec, inner, radius, side);
    const double rest = sup_abs_where(points, spec, 0.0, inner, side);
    return std::max(0.0, outer - rest) / (radius - inner);
  };
  result.outer_slope_positive = outer_slope(Side::PositiveAxis);
  result.outer_slope_negative = outer_slope(Side::NegativeAxis);
  if (result.outer_slope_positive < min_slope && result.outer_slope_negative < min_slope) {
    result.outcome = EnvelopeOutcome::Bounded;
    return result;
  }

  // Lower envelope through the origin: the largest slope valid on a side.
  double best_d1[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double d2 = 0.0;
  for (double u : points) {
    if (u == 0.0) continue;
    const double ratio = std::abs(spec(u)) / std::abs(u);
    auto& d1 = best_d1[u > 0.0 ? 0 : 1];
    d1 = std::min(d1, ratio);
    if (std::abs(u) >= 1.0) d2 = std::max(d2, ratio);
  }
  EnvelopeConstants c;
  c.side = best_d1[0] >= best_d1[1] ? Side::PositiveAxis : Side::NegativeAxis;
  c.d1 = std::max(best_d1[0], best_d1[1]);
  c.c1 = 0.0;
  c.d2 = std::max(d2, min_slope);
  c.c2 = 0.0;
  for (double u : points) c.c2 = std::max(c.c2, std::abs(spec(u)) - c.d2 * std::abs(u));

  if (!(c.d1 > min_slope)) {
    result.outcome = EnvelopeOutcome::Fails;
    c.d1 = min_slope;
    result.witness = verify_envelope(spec, c, grid);
    return result;
  }
  result.witness = verify_envelope(spec, c, grid);
  result.outcome = result.witness->holds() ? EnvelopeOutcome::Holds : EnvelopeOutcome::Fails;
  return result;
}

}  // namespace unitprior
