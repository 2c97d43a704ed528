#include "unitprior/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace unitprior {

namespace {

SignedLog mean_of(std::span<const SignedLog* const> values) {
  double ref = -std::numeric_limits<double>::infinity();
  for (const auto* v : values) {
    if (v->sign != 0) ref = std::max(ref, v->log_magnitude);
  }
  if (ref == -std::numeric_limits<double>::infinity()) return SignedLog::from_value(0.0);
  double sum = 0.0;
  for (const auto* v : values) {
    if (v->sign != 0) sum += v->sign * std::exp(v->log_magnitude - ref);
  }
  auto out = SignedLog::from_value(sum / static_cast<double>(values.size()));
  if (out.sign != 0) out.log_magnitude += ref;
  return out;
}

}  // namespace

std::string_view to_string(PoolKind kind) noexcept { return kind == PoolKind::Max ? "max" : "average"; }

PoolKind parse_pool_kind(std::string_view text) {
  if (text == "max") return PoolKind::Max;
  if (text == "average" || text == "avg" || text == "mean") return PoolKind::Average;
  throw std::invalid_argument("pooling kind must be 'max' or 'average'");
}

double pool(std::span<const double> values, const PoolingSpec& spec) {
  if (spec.region_size < 1) throw std::invalid_argument("region_size must be >= 1");
  if (values.size() != spec.region_size) throw std::invalid_argument("region length does not match region_size");
  if (spec.kind == PoolKind::Max) return *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

UnitSampleSet pool_samples(std::span<const UnitSampleSet> region, const PoolingSpec& spec) {
  if (spec.region_size < 1) throw std::invalid_argument("region_size must be >= 1");
  if (region.size() != spec.region_size) throw std::invalid_argument("region length does not match region_size");
  const std::size_t n = region.front().n_samples();
  for (const auto& set : region) {
    if (set.n_samples() != n) throw std::invalid_argument("pooled sample sets must be jointly drawn");
  }

  UnitSampleSet out;
  out.layer = region.front().layer;
  out.kind = region.front().kind;
  out.unit_index = region.front().unit_index;
  out.provenance = region.front().provenance;
  out.values.resize(n);
  std::vector<const SignedLog*> column(region.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < region.size(); ++j) column[j] = &region[j].values[i];
    if (spec.kind == PoolKind::Max) {
      out.values[i] = **std::max_element(column.begin(), column.end(),
                                         [](const SignedLog* a, const SignedLog* b) { return value_less(*a, *b); });
    } else {
      out.values[i] = region.size() == 1 ? *column.front() : mean_of(column);
    }
  }
  return out;
}

PooledTailCheck pooled_tail_check(const NetworkConfig& config, std::span<const double> x, std::size_t layer,
                                  std::span<const std::size_t> region, const PoolingSpec& spec,
                                  std::size_t n_samples, std::uint64_t seed, const PooledTailOptions& tail,
                                  const SamplingOptions& options) {
  if (region.empty()) throw std::invalid_argument("pooling region must be non-empty");
  if (region.size() != spec.region_size) throw std::invalid_argument("region length does not match region_size");
  if (std::set<std::size_t>(region.begin(), region.end()).size() != region.size()) {
    throw std::invalid_argument("pooling region indices must be distinct");
  }

  std::vector<UnitProbe> probes;
  for (auto unit : region) probes.push_back({layer, unit, tail.kind});
  const auto sets = sample_probes(config, x, probes, n_samples, seed, options);
  const auto pooled = pool_samples(sets, spec);

  PooledTailCheck check;
  check.before = estimate_theta_moments(moment_curve(sets.front(), tail.k_min, tail.k_max), tail.model);
  check.after = estimate_theta_moments(moment_curve(pooled, tail.k_min, tail.k_max), tail.model);
  check.difference = check.after.theta_hat - check.before.theta_hat;
  check.allowance = check.before.se_theta + check.after.se_theta + tail.tolerance;
  check.passed = std::abs(check.difference) <= check.allowance;
  return check;
}

}  // namespace unitprior
