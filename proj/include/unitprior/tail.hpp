#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unitprior/network.hpp"

namespace unitprior {

struct LogNorm {
  double log_norm = 0.0;  // log ||X||_k
  double se = 0.0;        // delta-method standard error of log_norm
};

struct MomentPoint {
  int k = 0;
  double log_norm = 0.0;
  double se = 0.0;
};

/// (k, log ||X||_k, se) for consecutive integer k.
struct MomentCurve {
  std::vector<MomentPoint> entries;
  std::size_t n_samples = 0;
  std::string source;
};

enum class TailMethod { MomentSlope, SurvivalSlope };

/// Regression model behind the moment-slope estimator. Both fit
/// log ||X||_k with a free intercept and are exact on c + theta log k.
enum class MomentModel {
  /// log ||X||_k = a + theta log k.
  PowerLaw,
  /// Adds the 1/k and log(k)/k terms of Stirling's expansion of
  /// log Gamma(1 + k theta) / k, removing the O(log k / k) small-k bias
  /// that Gaussian, exponential and Weibull moment curves carry.
  Stirling,
};

std::string_view to_string(TailMethod method) noexcept;
std::string_view to_string(MomentModel model) noexcept;
MomentModel parse_moment_model(std::string_view text);

struct TailEstimate {
  double theta_hat = 0.0;
  double se_theta = 0.0;
  TailMethod method = TailMethod::MomentSlope;
  MomentModel model = MomentModel::Stirling;  // moment-slope only
  int k_min = 0;                              // moment-slope only
  int k_max = 0;
  double tail_fraction = 0.0;  // survival-slope only
  /// Weighted residual sum of squares (moment) or residual variance of the
  /// Weibull-plot fit (survival).
  double fit_residual = 0.0;
  /// Samples behind the estimate: n for moments, tail order statistics for
  /// the survival fit.
  double effective_sample_size = 0.0;
};

/// log ||X||_k computed entirely in the log domain. Throws
/// std::invalid_argument if k < 1 or fewer than 100 samples, and
/// DegenerateDistribution if every sample is zero.
LogNorm empirical_log_norm(std::span<const SignedLog> samples, int k);
LogNorm empirical_log_norm(const UnitSampleSet& samples, int k);

/// Exact ||X||_k for X ~ N(0, sigma^2):
/// (sigma^k 2^{k/2} Gamma((k+1)/2) / sqrt(pi))^{1/k}.
double gaussian_norm_oracle(double sigma, int k);

MomentCurve moment_curve(std::span<const SignedLog> samples, int k_min, int k_max);
MomentCurve moment_curve(const UnitSampleSet& samples, int k_min, int k_max);

/// Weighted least squares (weights 1/se^2) of log_norm on log k plus the
/// model's correction terms; theta_hat is the log k coefficient. Falls back
/// to ordinary least squares when some se is zero.
TailEstimate estimate_theta_moments(const MomentCurve& curve, MomentModel model = MomentModel::Stirling);

inline constexpr std::size_t kSurvivalBlocks = 10;

/// Weibull plot over the top `tail_fraction` order statistics of |X|:
/// regress log(-log S(x)) on log x; theta_hat = 1 / slope. se_theta is the
/// spread of the same fit over kSurvivalBlocks disjoint blocks, divided by
/// sqrt(kSurvivalBlocks).
TailEstimate estimate_theta_survival(std::span<const SignedLog> samples, double tail_fraction = 0.1);
TailEstimate estimate_theta_survival(const UnitSampleSet& samples, double tail_fraction = 0.1);

struct RecursionVerdict {
  bool passed = false;
  double difference = 0.0;  // theta_next - theta_prev
  double allowance = 0.0;   // 2 (se_prev + se_next) + method tolerance
};

inline constexpr double kRecursionTolerance = 0.1;

/// Checks that one layer adds 1/2 to the tail parameter.
RecursionVerdict recursion_check(const TailEstimate& prev, const TailEstimate& next,
                                 double method_tolerance = kRecursionTolerance);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

/// One-sample KS test against N(0, sigma^2); asymptotic p-value with
/// Stephens' finite-n correction. Requires at least 1000 samples.
KsResult ks_gaussian_test(std::span<const SignedLog> samples, double sigma);
KsResult ks_gaussian_test(const UnitSampleSet& samples, double sigma);

/// Two-sample KS test on decoded values.
KsResult ks_two_sample_test(std::span<const double> a, std::span<const double> b);

}  // namespace unitprior
