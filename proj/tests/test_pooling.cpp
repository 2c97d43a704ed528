#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "samples.hpp"
#include "unitprior/pooling.hpp"

using namespace unitprior;

TEST(Pooling, Kernel) {
  const std::vector<double> v{1.0, -3.0, 2.5, 0.5};
  EXPECT_EQ(pool(v, {PoolKind::Max, 4}), 2.5);
  EXPECT_DOUBLE_EQ(pool(v, {PoolKind::Average, 4}), 0.25);
  EXPECT_THROW(pool(v, {PoolKind::Max, 3}), std::invalid_argument);
  EXPECT_EQ(parse_pool_kind("average"), PoolKind::Average);
  EXPECT_THROW(parse_pool_kind("median"), std::invalid_argument);
}

TEST(Pooling, SampleWiseMatchesDecodedKernel) {
  std::vector<UnitSampleSet> region(3);
  for (std::size_t j = 0; j < 3; ++j) {
    auto v = oracles::laplace_sample(500, 10 + j);
    v[7] = 0.0;
    region[j].values = to_signed_log(v);
  }
  const auto max = pool_samples(region, {PoolKind::Max, 3});
  const auto avg = pool_samples(region, {PoolKind::Average, 3});
  for (std::size_t i = 0; i < 500; ++i) {
    const std::vector<double> col{region[0].values[i].value(), region[1].values[i].value(),
                                  region[2].values[i].value()};
    EXPECT_EQ(max.values[i].value(), pool(col, {PoolKind::Max, 3}));
    EXPECT_NEAR(avg.values[i].value(), pool(col, {PoolKind::Average, 3}), 1e-12);
    EXPECT_GE(max.values[i].value(), avg.values[i].value() - 1e-12);
  }
}

TEST(Pooling, AverageWorksBeyondDoubleRange) {
  std::vector<UnitSampleSet> region(2);
  region[0].values = {{1, 1000.0}};
  region[1].values = {{-1, 999.0}};
  const auto avg = pool_samples(region, {PoolKind::Average, 2});
  EXPECT_EQ(avg.values[0].sign, 1);
  EXPECT_NEAR(avg.values[0].log_magnitude, 1000.0 + std::log((1.0 - std::exp(-1.0)) / 2.0), 1e-12);
}

TEST(Pooling, MaxDominatesAverageOnNetworkSamples) {
  const auto c = relu_net(10, {10, 10});
  const auto x = sample_input(10, 2);
  std::vector<UnitProbe> probes;
  for (std::size_t u = 0; u < 4; ++u) probes.push_back({2, u, UnitKind::Post});
  const auto sets = sample_probes(c, x, probes, 2000, 3);
  const auto max = pool_samples(sets, {PoolKind::Max, 4});
  const auto avg = pool_samples(sets, {PoolKind::Average, 4});
  for (std::size_t i = 0; i < 2000; ++i) {
    EXPECT_FALSE(value_less(max.values[i], avg.values[i]) &&
                 std::abs(max.values[i].value() - avg.values[i].value()) > 1e-12);
  }
}

TEST(Pooling, TailCheckRejectsBadRegions) {
  const auto c = relu_net(10, {10});
  const auto x = sample_input(10, 2);
  const std::vector<std::size_t> dup{0, 1, 1, 2};
  EXPECT_THROW(pooled_tail_check(c, x, 1, dup, {PoolKind::Max, 4}, 1000, 1), std::invalid_argument);
  const std::vector<std::size_t> three{0, 1, 2};
  EXPECT_THROW(pooled_tail_check(c, x, 1, three, {PoolKind::Max, 4}, 1000, 1), std::invalid_argument);
}

TEST(Pooling, TailCheckOnFirstLayer) {
  const auto c = relu_net(10, {10});
  const auto x = sample_input(10, 2);
  const std::vector<std::size_t> region{0, 1, 2, 3};
  for (const auto kind : {PoolKind::Max, PoolKind::Average}) {
    const auto r = pooled_tail_check(c, x, 1, region, {kind, 4}, 200000, 4);
    EXPECT_TRUE(r.passed) << to_string(kind) << ' ' << r.difference << " vs " << r.allowance;
    EXPECT_DOUBLE_EQ(r.allowance, r.before.se_theta + r.after.se_theta + 0.1);
  }
}
