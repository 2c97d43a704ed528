#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "unitprior/network.hpp"
#include "unitprior/tail.hpp"

namespace unitprior {

enum class PoolKind { Max, Average };

std::string_view to_string(PoolKind kind) noexcept;
PoolKind parse_pool_kind(std::string_view text);

struct PoolingSpec {
  PoolKind kind = PoolKind::Max;
  std::size_t region_size = 4;
};

/// Max or arithmetic mean of one region; values.size() must equal
/// region_size.
double pool(std::span<const double> values, const PoolingSpec& spec);

/// Pools jointly drawn unit samples sample-by-sample, in the log domain.
/// The result keeps the first set's layer and kind.
UnitSampleSet pool_samples(std::span<const UnitSampleSet> region, const PoolingSpec& spec);

struct PooledTailOptions {
  UnitKind kind = UnitKind::Post;
  int k_min = 2;
  int k_max = 10;
  MomentModel model = MomentModel::Stirling;
  /// Added to the combined standard error in the verdict.
  double tolerance = 0.1;
};

struct PooledTailCheck {
  TailEstimate before;  // representative unit: region.front()
  TailEstimate after;   // pooled statistic over the same draws
  double difference = 0.0;
  double allowance = 0.0;
  bool passed = false;
};

/// Moment-slope estimate of theta for one unit of the region and for the
/// pooled statistic; passes iff |after - before| <= se_before + se_after +
/// tolerance.
PooledTailCheck pooled_tail_check(const NetworkConfig& config, std::span<const double> x, std::size_t layer,
                                  std::span<const std::size_t> region, const PoolingSpec& spec,
                                  std::size_t n_samples, std::uint64_t seed, const PooledTailOptions& tail = {},
                                  const SamplingOptions& options = {});

}  // namespace unitprior
