#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unitprior {

enum class Family { ReLU, PReLU, ELU, SELU, Tanh, Sigmoid, Identity };

/// An activation function and its parameters. Immutable once built; the
/// factories validate parameters and throw std::invalid_argument.
class NonlinearitySpec {
 public:
  static constexpr double kSeluLambda = 1.0507009873554805;
  static constexpr double kSeluAlpha = 1.6732632423543772;

  static NonlinearitySpec relu();
  static NonlinearitySpec prelu(double alpha);
  static NonlinearitySpec elu(double alpha = 1.0);
  static NonlinearitySpec selu(double lambda = kSeluLambda, double alpha = kSeluAlpha);
  static NonlinearitySpec tanh();
  static NonlinearitySpec sigmoid();
  static NonlinearitySpec identity();

  /// Builds a spec from a family name ("relu", "prelu", ...) and its
  /// parameters in declaration order. Missing parameters take the defaults
  /// above; prelu requires its slope.
  static NonlinearitySpec parse(std::string_view name, std::span<const double> params);

  Family family() const noexcept { return family_; }
  std::string_view name() const noexcept;
  std::vector<double> params() const;
  /// "prelu(0.1)", "selu(1.0507,1.6733)", "relu", ...
  std::string to_string() const;

  /// phi(c u) = c phi(u) for every c > 0.
  bool positively_homogeneous() const noexcept;

  /// Unchecked evaluation; hot path of the forward pass.
  double operator()(double u) const noexcept;

  friend bool operator==(const NonlinearitySpec&, const NonlinearitySpec&) = default;

 private:
  NonlinearitySpec(Family family, double a, double b) : family_(family), a_(a), b_(b) {}

  Family family_;
  double a_;
  double b_;
};

/// phi(u); throws std::invalid_argument when u is not finite.
double apply(const NonlinearitySpec& spec, double u);

enum class Side { PositiveAxis, NegativeAxis };
enum class Inequality { Lower, Upper };

std::string_view to_string(Side side) noexcept;
std::string_view to_string(Inequality which) noexcept;

/// Constants of |phi(u)| >= c1 + d1 |u| (on one half-line) and
/// |phi(u)| <= c2 + d2 |u| (everywhere).
struct EnvelopeConstants {
  double c1 = 0.0;
  double d1 = 1.0;
  Side side = Side::PositiveAxis;
  double c2 = 0.0;
  double d2 = 1.0;
};

/// Symmetric test grid: 0 plus `points_per_sign` log-spaced magnitudes in
/// [min_magnitude, max_magnitude] on each side.
struct EnvelopeGrid {
  double min_magnitude = 1e-3;
  double max_magnitude = 1e3;
  std::size_t points_per_sign = 100000;

  /// Ascending grid points. Throws std::invalid_argument unless the grid
  /// reaches |u| >= 100 with at least 10^4 points.
  std::vector<double> points() const;
};

struct EnvelopeViolation {
  double u;
  Inequality which;
};

struct EnvelopeWitness {
  EnvelopeConstants constants;
  EnvelopeGrid grid;
  std::optional<EnvelopeViolation> violation;

  bool holds() const noexcept { return !violation.has_value(); }
};

/// Checks both envelope inequalities over the grid and records the first
/// violating point. A failure is a verdict, not an error.
EnvelopeWitness verify_envelope(const NonlinearitySpec& spec, const EnvelopeConstants& constants,
                                const EnvelopeGrid& grid = {});

enum class EnvelopeOutcome { Holds, Bounded, Fails };

std::string_view to_string(EnvelopeOutcome outcome) noexcept;

struct EnvelopeSearch {
  EnvelopeOutcome outcome = EnvelopeOutcome::Fails;
  /// Present unless the function was declared bounded.
  std::optional<EnvelopeWitness> witness;
  double sup_abs = 0.0;
  /// Growth rate of sup|phi| over the outermost decade, per side.
  double outer_slope_positive = 0.0;
  double outer_slope_negative = 0.0;
};

/// Finds the tightest linear envelopes on the grid, or declares phi bounded
/// when sup|phi| stops growing (slope below `min_slope`) on both sides.
EnvelopeSearch search_envelope_constants(const NonlinearitySpec& spec, const EnvelopeGrid& grid = {},
                                         double min_slope = 1e-6);

}  // namespace unitprior
