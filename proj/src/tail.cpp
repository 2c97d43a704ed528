#include "unitprior/tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "unitprior/errors.hpp"

namespace unitprior {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Offsets of the non-zero log-magnitudes from their maximum.
struct LogSample {
  std::vector<double> offsets;
  double max_log = kNegInf;
  std::size_t n = 0;
};

LogSample prepare(std::span<const SignedLog> samples) {
  LogSample out;
  out.n = samples.size();
  for (const auto& s : samples) {
    if (s.sign != 0) out.max_log = std::max(out.max_log, s.log_magnitude);
  }
  if (out.max_log == kNegInf) throw DegenerateDistribution("all samples are zero");
  out.offsets.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.sign != 0) out.offsets.push_back(s.log_magnitude - out.max_log);
  }
  return out;
}

// log E|X|^order via log-sum-exp.
double log_moment(const LogSample& s, int order) {
  double sum = 0.0;
  for (double d : s.offsets) sum += std::exp(order * d);
  return order * s.max_log + std::log(sum) - std::log(static_cast<double>(s.n));
}

LogNorm log_norm_from(const LogSample& s, int k) {
  const double log_mk = log_moment(s, k);
  const double log_m2k = log_moment(s, 2 * k);
  // Var(M_k hat) / M_k^2 = (M_2k / M_k^2 - 1) / n
  const double rel_var = std::max(0.0, std::expm1(log_m2k - 2.0 * log_mk)) / static_cast<double>(s.n);
  return {log_mk / k, std::sqrt(rel_var) / k};
}

void check_samples(std::size_t n, int k) {
  if (k < 1) throw std::invalid_argument("moment order k must be >= 1");
  if (n < 100) throw std::invalid_argument("at least 100 samples are required for a moment estimate");
}

struct LinearFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  double residual = 0.0;
};

// Weighted least squares; weights empty means ordinary least squares with
// the residual variance as noise estimate.
LinearFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& weights) {
  const auto m = design.rows();
  const auto p = design.cols();
  const bool weighted = weights.size() == m;
  Eigen::VectorXd sqrt_w = weighted ? Eigen::VectorXd(weights.cwiseSqrt()) : Eigen::VectorXd::Ones(m);
  const Eigen::MatrixXd xw = sqrt_w.asDiagonal() * design;
  const Eigen::VectorXd yw = sqrt_w.asDiagonal() * y;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  if (qr.rank() < p) throw std::invalid_argument("singular regression: design is rank deficient");

  LinearFit fit;
  fit.beta = qr.solve(yw);
  fit.residual = (yw - xw * fit.beta).squaredNorm();
  fit.cov = (xw.transpose() * xw).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  if (!weighted) {
    const double noise = m > p ? fit.residual / static_cast<double>(m - p) : 0.0;
    fit.cov *= noise;
  }
  return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double stephens_lambda(double effective_n, double statistic) {
  const double root = std::sqrt(effective_n);
  return (root + 0.12 + 0.11 / root) * statistic;
}

}  // namespace

std::string_view to_string(TailMethod method) noexcept {
  return method == TailMethod::MomentSlope ? "moment-slope" : "survival-slope";
}

std::string_view to_string(MomentModel model) noexcept {
  return model == MomentModel::PowerLaw ? "power-law" : "stirling";
}

MomentModel parse_moment_model(std::string_view text) {
  if (text == "power-law") return MomentModel::PowerLaw;
  if (text == "stirling") return MomentModel::Stirling;
  throw std::invalid_argument("moment model must be 'power-law' or 'stirling'");
}

LogNorm empirical_log_norm(std::span<const SignedLog> samples, int k) {
  check_samples(samples.size(), k);
  return log_norm_from(prepare(samples), k);
}

LogNorm empirical_log_norm(const UnitSampleSet& samples, int k) { return empirical_log_norm(samples.values, k); }

double gaussian_norm_oracle(double sigma, int k) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (k < 1) throw std::invalid_argument("moment order k must be >= 1");
  const double kd = k;
  const double log_moment = kd * std::log(sigma) + 0.5 * kd * std::numbers::ln2 +
                            std::lgamma(0.5 * (kd + 1.0)) - 0.5 * std::log(std::numbers::pi);
  return std::exp(log_moment / kd);
}

MomentCurve moment_curve(std::span<const SignedLog> samples, int k_min, int k_max) {
  if (k_min < 1 || k_min >= k_max) throw std::invalid_argument("moment range needs 1 <= k_min < k_max");
  check_samples(samples.size(), k_min);
  const auto prepared = prepare(samples);

  MomentCurve curve;
  curve.n_samples = samples.size();
  for (int k = k_min; k <= k_max; ++k) {
    const auto ln = log_norm_from(prepared, k);
    if (!std::isfinite(ln.log_norm) || !std::isfinite(ln.se)) {
      throw MomentOverflow("moment of order " + std::to_string(2 * k) + " is not representable");
    }
    curve.entries.push_back({k, ln.log_norm, ln.se});
  }
  return curve;
}

MomentCurve moment_curve(const UnitSampleSet& samples, int k_min, int k_max) {
  auto curve = moment_curve(std::span<const SignedLog>(samples.values), k_min, k_max);
  curve.source = "layer" + std::to_string(samples.layer) + "/" + std::string(to_string(samples.kind)) + "/unit" +
                 std::to_string(samples.unit_index);
  return curve;
}

TailEstimate estimate_theta_moments(const MomentCurve& curve, MomentModel model) {
  const auto m = static_cast<Eigen::Index>(curve.entries.size());
  if (m < 4) throw std::invalid_argument("moment-slope fit needs at least 4 curve entries");
  const Eigen::Index p = model == MomentModel::PowerLaw ? 2 : 4;

  Eigen::MatrixXd design(m, p);
  Eigen::VectorXd y(m);
  Eigen::VectorXd weights(m);
  bool weighted = true;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& e = curve.entries[static_cast<std::size_t>(i)];
    if (e.k < 1) throw std::invalid_argument("moment orders must be >= 1");
    const double k = e.k;
    const double lk = std::log(k);
    design(i, 0) = 1.0;
    design(i, 1) = lk;
    if (p == 4) {
      design(i, 2) = 1.0 / k;
      design(i, 3) = lk / k;
    }
    y(i) = e.log_norm;
    if (e.se > 0.0 && std::isfinite(e.se)) {
      weights(i) = 1.0 / (e.se * e.se);
    } else {
      weighted = false;
    }
  }

  const auto fit = least_squares(design, y, weighted ? weights : Eigen::VectorXd());
  TailEstimate est;
  est.theta_hat = fit.beta(1);
  est.se_theta = std::sqrt(std::max(0.0, fit.cov(1, 1)));
  est.method = TailMethod::MomentSlope;
  est.model = model;
  est.k_min = curve.entries.front().k;
  est.k_max = curve.entries.back().k;
  est.fit_residual = fit.residual;
  est.effective_sample_size = static_cast<double>(curve.n_samples);
  return est;
}

namespace {

struct WeibullFit {
  double slope = 0.0;
  double slope_variance = 0.0;
  double residual_variance = 0.0;
  std::size_t points = 0;
};

// Weibull plot over the top `m` of the log-magnitudes in `logs` (reordered).
WeibullFit weibull_fit(std::vector<double>& logs, std::size_t m) {
  const std::size_t n = logs.size();
  const auto tail_begin = logs.begin() + static_cast<std::ptrdiff_t>(n - m);
  std::nth_element(logs.begin(), tail_begin, logs.end());
  std::sort(tail_begin, logs.end());

  // Empirical P(|X| >= x_(i)) = (n - i) / n at the first index of each tie group.
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(m);
  ys.reserve(m);
  std::size_t distinct = 0;
  std::size_t group_start = n - m;
  for (std::size_t i = n - m; i < n; ++i) {
    const double x = logs[i];
    if (i == n - m || x != logs[i - 1]) {
      group_start = i;
      if (std::isfinite(x)) ++distinct;
    }
    if (!std::isfinite(x)) continue;
    const double survival = static_cast<double>(n - group_start) / static_cast<double>(n);
    xs.push_back(x);
    ys.push_back(std::log(-std::log(survival)));
  }
  if (distinct < 10) throw DegenerateDistribution("tail collapses to fewer than 10 distinct values");

  const auto count = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd design(count, 2);
  Eigen::VectorXd y(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = xs[static_cast<std::size_t>(i)];
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  const auto fit = least_squares(design, y, Eigen::VectorXd());
  if (!(fit.beta(1) > 0.0)) throw DegenerateDistribution("Weibull plot has non-positive slope");
  return {fit.beta(1), std::max(0.0, fit.cov(1, 1)), count > 2 ? fit.residual / static_cast<double>(count - 2) : 0.0,
          xs.size()};
}

std::vector<double> log_magnitudes(std::span<const SignedLog> samples) {
  std::vector<double> logs(samples.size());
  std::transform(samples.begin(), samples.end(), logs.begin(), [](const SignedLog& s) { return s.log_magnitude; });
  return logs;
}

}  // namespace

TailEstimate estimate_theta_survival(std::span<const SignedLog> samples, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 0.5)) throw std::invalid_argument("tail_fraction must be in (0, 0.5)");
  const std::size_t n = samples.size();
  const auto m = static_cast<std::size_t>(tail_fraction * static_cast<double>(n));
  if (m < 200) throw std::invalid_argument("survival fit needs tail_fraction * n_samples >= 200");

  auto logs = log_magnitudes(samples);
  const auto full = weibull_fit(logs, m);

  TailEstimate est;
  est.method = TailMethod::SurvivalSlope;
  est.theta_hat = 1.0 / full.slope;
  est.tail_fraction = tail_fraction;
  est.fit_residual = full.residual_variance;
  est.effective_sample_size = static_cast<double>(full.points);

  // Neighbouring order statistics are strongly correlated, so the regression
  // standard error is far too small. Use the spread over disjoint blocks.
  const std::size_t block = n / kSurvivalBlocks;
  const auto block_m = static_cast<std::size_t>(tail_fraction * static_cast<double>(block));
  if (block_m >= 50) {
    std::vector<double> thetas;
    for (std::size_t b = 0; b < kSurvivalBlocks; ++b) {
      auto part = log_magnitudes(samples.subspan(b * block, block));
      try {
        thetas.push_back(1.0 / weibull_fit(part, block_m).slope);
      } catch (const DegenerateDistribution&) {
      }
    }
    if (thetas.size() >= 2) {
      const double mean = std::accumulate(thetas.begin(), thetas.end(), 0.0) / static_cast<double>(thetas.size());
      double ss = 0.0;
      for (const double t : thetas) ss += (t - mean) * (t - mean);
      const double sd = std::sqrt(ss / static_cast<double>(thetas.size() - 1));
      // A block estimate uses 1/B of the data; scale its spread to the full sample.
      est.se_theta = sd / std::sqrt(static_cast<double>(kSurvivalBlocks));
      return est;
    }
  }
  est.se_theta = std::sqrt(full.slope_variance) / (full.slope * full.slope);
  return est;
}

TailEstimate estimate_theta_survival(const UnitSampleSet& samples, double tail_fraction) {
  return estimate_theta_survival(std::span<const SignedLog>(samples.values), tail_fraction);
}

RecursionVerdict recursion_check(const TailEstimate& prev, const TailEstimate& next, double method_tolerance) {
  RecursionVerdict verdict;
  verdict.difference = next.theta_hat - prev.theta_hat;
  verdict.allowance = 2.0 * (prev.se_theta + next.se_theta) + method_tolerance;
  verdict.passed = std::abs(verdict.difference - 0.5) <= verdict.allowance;
  return verdict;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi theta form of the CDF, fast for small lambda.
    const double a = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int j = 1; j <= 9; j += 2) cdf += std::exp(-a * j * j);
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_gaussian_test(std::span<const SignedLog> samples, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be finite and > 0");
  if (samples.size() < 1000) throw std::invalid_argument("KS test needs at least 1000 samples");
  const double log_sigma = std::log(sigma);
  std::vector<double> z(samples.size());
  std::transform(samples.begin(), samples.end(), z.begin(), [&](const SignedLog& s) {
    return s.sign == 0 ? 0.0 : s.sign * std::exp(s.log_magnitude - log_sigma);
  });
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, kolmogorov_survival(stephens_lambda(n, d))};
}

KsResult ks_gaussian_test(const UnitSampleSet& samples, double sigma) {
  return ks_gaussian_test(std::span<const SignedLog>(samples.values), sigma);
}

KsResult ks_two_sample_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return {d, kolmogorov_survival(stephens_lambda(nx * ny / (nx + ny), d))};
}

}  // namespace unitprior
