#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "samples.hpp"
#include "unitprior/covariance.hpp"
#include "unitprior/errors.hpp"

using namespace unitprior;

namespace {

UnitSampleSet set_of(const std::vector<double>& v, std::size_t unit) {
  UnitSampleSet s;
  s.unit_index = unit;
  s.values = to_signed_log(v);
  return s;
}

double brute_covariance(const std::vector<double>& a, const std::vector<double>& b, int s, int t) {
  double sa = 0.0, sb = 0.0, sab = 0.0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::pow(a[i], s);
    const double y = std::pow(b[i], t);
    sa += x;
    sb += y;
    sab += x * y;
  }
  return (sab - sa * sb / n) / (n - 1.0);
}

}  // namespace

TEST(Covariance, VerdictRule) {
  EXPECT_EQ(classify_covariance(1.0, 0.1), CovarianceVerdict::NonnegativeConsistent);
  EXPECT_EQ(classify_covariance(0.25, 0.1), CovarianceVerdict::ZeroConsistent);
  EXPECT_EQ(classify_covariance(-0.3, 0.1), CovarianceVerdict::ZeroConsistent);
  EXPECT_EQ(classify_covariance(-0.31, 0.1), CovarianceVerdict::Violation);
}

TEST(Covariance, EstimateMatchesBruteForce) {
  const auto z1 = oracles::gaussian_sample(30000, 1.0, 1);
  const auto z2 = oracles::gaussian_sample(30000, 1.0, 2);
  std::vector<double> a(z1.size()), b(z1.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = z1[i];
    b[i] = 0.6 * z1[i] + 0.8 * z2[i];
  }
  for (const auto [s, t] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 3}}) {
    const auto r = covariance_from_samples(set_of(a, 0), set_of(b, 1), {s, t});
    const double brute = brute_covariance(a, b, s, t);
    EXPECT_NEAR(r.estimate, brute, 1e-6 * (1.0 + std::abs(brute))) << s << t;
  }
  const auto r = covariance_from_samples(set_of(a, 0), set_of(b, 1), {1, 1});
  EXPECT_NEAR(r.estimate, 0.6, 5 * r.se);
  EXPECT_EQ(r.verdict, CovarianceVerdict::NonnegativeConsistent);
  EXPECT_EQ(r.n_batches, kDefaultBatches);
}

TEST(Covariance, NegativeDependenceIsAViolation) {
  const auto z = oracles::gaussian_sample(20000, 1.0, 3);
  std::vector<double> neg(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) neg[i] = -z[i];
  EXPECT_EQ(covariance_from_samples(set_of(z, 0), set_of(neg, 1), {1, 1}).verdict, CovarianceVerdict::Violation);
}

TEST(Covariance, Errors) {
  const auto z = oracles::gaussian_sample(1000, 1.0, 3);
  EXPECT_THROW(covariance_from_samples(set_of(z, 0), set_of(z, 1), {1, 1}, 10), std::invalid_argument);
  EXPECT_THROW(covariance_from_samples(set_of(z, 0), set_of(z, 1), {0, 1}), std::invalid_argument);
  std::vector<double> shorter(z.begin(), z.begin() + 500);
  EXPECT_THROW(covariance_from_samples(set_of(z, 0), set_of(shorter, 1), {1, 1}), std::invalid_argument);
  std::vector<double> huge(z.size(), 1e100);
  EXPECT_THROW(covariance_from_samples(set_of(huge, 0), set_of(z, 1), {2, 1}), MomentOverflow);

  const auto c = relu_net(5, {4});
  const auto x = sample_input(5, 1);
  EXPECT_THROW(estimate_unit_covariance(c, x, 1, {0, 1}, {1, 1}, 9999, 1), std::invalid_argument);
  EXPECT_THROW(estimate_unit_covariance(c, x, 1, {2, 2}, {1, 1}, 10000, 1), std::invalid_argument);
  EXPECT_THROW(estimate_unit_covariance(c, x, 2, {0, 1}, {1, 1}, 10000, 1), std::invalid_argument);
}

TEST(Covariance, FirstLayerUnitsAreUncorrelated) {
  // Units of layer 1 are independent given x, so z = estimate / se should be
  // centred with rare |z| > 3 across seeds.
  const auto c = relu_net(10, {10, 10});
  const auto x = sample_input(10, 1);
  const int seeds = 200;
  for (const int s : {1, 2}) {
    double z_sum = 0.0;
    int beyond = 0;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto r = estimate_unit_covariance(c, x, 1, {0, 1}, {s, s}, 20000, 1000 + seed);
      const double z = r.estimate / r.se;
      z_sum += z;
      if (std::abs(z) > kVerdictSigmas) ++beyond;
    }
    EXPECT_LT(std::abs(z_sum / seeds), 0.25) << s;
    EXPECT_LE(beyond, seeds * 3 / 100) << s;
  }
}

TEST(Covariance, DeeperUnitsArePositivelyDependent) {
  const auto c = relu_net(10, {10, 10});
  const auto x = sample_input(10, 1);
  const auto r = estimate_unit_covariance(c, x, 2, {0, 1}, {2, 2}, 50000, 17);
  EXPECT_EQ(r.verdict, CovarianceVerdict::NonnegativeConsistent);
}

TEST(Covariance, SweepCellsMatchSingleEstimates) {
  const auto c = relu_net(10, {8, 8});
  const auto x = sample_input(10, 1);
  const std::vector<std::size_t> layers{1, 2};
  const std::vector<PowerPair> powers{{1, 1}, {1, 2}};
  const auto s = sweep(c, x, layers, powers, 10000, 5);
  ASSERT_EQ(s.cells.size(), 4u);
  EXPECT_EQ(s.summary.errors, 0u);
  EXPECT_EQ(s.summary.nonnegative + s.summary.zero + s.summary.violations, 4u);
  const auto single = estimate_unit_covariance(c, x, 2, {0, 1}, {1, 2}, 10000, 5);
  ASSERT_TRUE(s.cells[3].report);
  EXPECT_EQ(s.cells[3].layer, 2u);
  EXPECT_EQ(s.cells[3].report->estimate, single.estimate);
  EXPECT_EQ(s.cells[3].report->se, single.se);
}
