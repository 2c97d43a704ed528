#include "unitprior/covariance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "unitprior/errors.hpp"

namespace unitprior {

namespace {

// log(DBL_MAX)
const double kMaxLog = std::log(std::numeric_limits<double>::max());

std::vector<double> powered(const UnitSampleSet& set, int power) {
  std::vector<double> out(set.n_samples());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = set.values[i];
    if (v.sign == 0) {
      out[i] = 0.0;
      continue;
    }
    if (2.0 * power * v.log_magnitude > kMaxLog) {
      throw MomentOverflow("power " + std::to_string(2 * power) + " of layer-" + std::to_string(set.layer) +
                           " units overflows; use smaller powers");
    }
    const double sign = (power % 2 == 1 && v.sign < 0) ? -1.0 : 1.0;
    out[i] = sign * std::exp(power * v.log_magnitude);
  }
  return out;
}

double covariance(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - mean_a) * (b[i] - mean_b);
  return acc / (n - 1.0);
}

void check_pair(const NetworkConfig& config, std::size_t layer, UnitPair pair) {
  if (layer < 1 || layer > config.depth()) throw std::invalid_argument("layer out of range");
  if (pair.first == pair.second) throw std::invalid_argument("covariance needs two distinct units");
  if (pair.first >= config.width(layer) || pair.second >= config.width(layer)) {
    throw std::invalid_argument("unit index out of range for its layer");
  }
}

void check_powers(PowerPair powers) {
  if (powers.s < 1 || powers.t < 1) throw std::invalid_argument("powers must be >= 1");
}

}  // namespace

std::string_view to_string(CovarianceVerdict verdict) noexcept {
  switch (verdict) {
    case CovarianceVerdict::NonnegativeConsistent: return "nonnegative-consistent";
    case CovarianceVerdict::ZeroConsistent: return "zero-consistent";
    case CovarianceVerdict::Violation: return "violation";
  }
  return "violation";
}

CovarianceVerdict classify_covariance(double estimate, double se) noexcept {
  if (estimate < -kVerdictSigmas * se) return CovarianceVerdict::Violation;
  if (std::abs(estimate) <= kVerdictSigmas * se) return CovarianceVerdict::ZeroConsistent;
  return CovarianceVerdict::NonnegativeConsistent;
}

CovarianceReport covariance_from_samples(const UnitSampleSet& a, const UnitSampleSet& b, PowerPair powers,
                                         std::size_t n_batches) {
  check_powers(powers);
  if (a.n_samples() != b.n_samples()) throw std::invalid_argument("sample sets must be jointly drawn");
  if (n_batches < 30) throw std::invalid_argument("batch-means needs at least 30 batches");
  const std::size_t n = a.n_samples();
  const std::size_t batch = n / n_batches;
  if (batch < 2) throw std::invalid_argument("too few samples for the requested batches");

  const auto pa = powered(a, powers.s);
  const auto pb = powered(b, powers.t);

  CovarianceReport report;
  report.layer = a.layer;
  report.pair = {a.unit_index, b.unit_index};
  report.powers = powers;
  report.n_samples = n;
  report.n_batches = n_batches;
  report.estimate = covariance(pa, pb);

  std::vector<double> batch_cov(n_batches);
  for (std::size_t j = 0; j < n_batches; ++j) {
    batch_cov[j] = covariance(std::span(pa).subspan(j * batch, batch), std::span(pb).subspan(j * batch, batch));
  }
  double mean = 0.0;
  for (double c : batch_cov) mean += c;
  mean /= static_cast<double>(n_batches);
  double var = 0.0;
  for (double c : batch_cov) var += (c - mean) * (c - mean);
  var /= static_cast<double>(n_batches - 1);
  report.se = std::sqrt(var / static_cast<double>(n_batches));
  if (!std::isfinite(report.estimate) || !std::isfinite(report.se)) {
    throw MomentOverflow("covariance of powers (" + std::to_string(powers.s) + "," + std::to_string(powers.t) +
                         ") is not finite; use smaller powers");
  }
  report.verdict = classify_covariance(report.estimate, report.se);
  return report;
}

CovarianceReport estimate_unit_covariance(const NetworkConfig& config, std::span<const double> x, std::size_t layer,
                                          UnitPair pair, PowerPair powers, std::size_t n_samples,
                                          std::uint64_t seed, const SamplingOptions& options, UnitKind kind) {
  config.validate();
  check_pair(config, layer, pair);
  check_powers(powers);
  if (n_samples < 10000) throw std::invalid_argument("covariance estimate needs n_samples >= 10^4");
  const UnitProbe probes[] = {{layer, pair.first, kind}, {layer, pair.second, kind}};
  const auto sets = sample_probes(config, x, probes, n_samples, seed, options);
  return covariance_from_samples(sets[0], sets[1], powers);
}

SweepResult sweep(const NetworkConfig& config, std::span<const double> x, std::span<const std::size_t> layers,
                  std::span<const PowerPair> powers, std::size_t n_samples, std::uint64_t seed, UnitPair pair,
                  const SamplingOptions& options, UnitKind kind) {
  SweepResult result;
  for (std::size_t layer : layers) {
    std::vector<UnitSampleSet> sets;
    std::string layer_error;
    try {
      check_pair(config, layer, pair);
      if (n_samples < 10000) throw std::invalid_argument("covariance estimate needs n_samples >= 10^4");
      const UnitProbe probes[] = {{layer, pair.first, kind}, {layer, pair.second, kind}};
      sets = sample_probes(config, x, probes, n_samples, seed, options);
    } catch (const std::exception& e) {
      layer_error = e.what();
    }
    for (const auto& pw : powers) {
      SweepCell cell{layer, pw, std::nullopt, layer_error};
      if (layer_error.empty()) {
        try {
          cell.report = covariance_from_samples(sets[0], sets[1], pw);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
      if (cell.report) {
        switch (cell.report->verdict) {
          case CovarianceVerdict::NonnegativeConsistent: ++result.summary.nonnegative; break;
          case CovarianceVerdict::ZeroConsistent: ++result.summary.zero; break;
          case CovarianceVerdict::Violation: ++result.summary.violations; break;
        }
      } else {
        ++result.summary.errors;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace unitprior
