#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "unitprior/network.hpp"
#include "unitprior/penalty.hpp"

using namespace unitprior;

TEST(Penalty, LqExamples) {
  const std::vector<double> v{3.0, -4.0};
  EXPECT_DOUBLE_EQ(lq_penalty(v, 2.0), 25.0);
  EXPECT_DOUBLE_EQ(lq_penalty(v, 1.0), 7.0);
  EXPECT_NEAR(lq_penalty(v, 0.5), std::sqrt(3.0) + 2.0, 1e-15);
  EXPECT_THROW(lq_penalty(v, 0.0), std::invalid_argument);
}

TEST(Penalty, WeightDecayCountsBias) {
  WeightSet w;
  w.layers.push_back((Eigen::MatrixXd(1, 3) << 1.0, 2.0, -2.0).finished());
  w.layers.push_back(Eigen::MatrixXd::Constant(2, 2, 0.5));
  EXPECT_DOUBLE_EQ(weight_decay(w), 10.0);
}

TEST(Penalty, UnitPenaltyExponents) {
  const std::vector<std::vector<double>> units{{1.0, 2.0}, {-4.0}, {8.0, 1.0}};
  const auto b = unit_penalty(units);
  ASSERT_EQ(b.exponents.size(), 3u);
  EXPECT_DOUBLE_EQ(b.exponents[0], 2.0);
  EXPECT_DOUBLE_EQ(b.exponents[1], 1.0);
  EXPECT_DOUBLE_EQ(b.exponents[2], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.layer_penalties[0], 5.0);
  EXPECT_DOUBLE_EQ(b.layer_penalties[1], 4.0);
  EXPECT_NEAR(b.layer_penalties[2], 4.0 + 1.0, 1e-12);
  EXPECT_NEAR(b.total_unit_penalty, 14.0, 1e-12);
  EXPECT_TRUE(b.copula_term_excluded);
}

TEST(Penalty, SingleLayerIsWeightDecayOfUnits) {
  const std::vector<std::vector<double>> units{{0.3, -1.7, 2.2, 0.0}};
  EXPECT_EQ(unit_penalty(units).total_unit_penalty, lq_penalty(units[0], 2.0));
}

TEST(Contour, PointsLieOnTheBall) {
  for (const double q : {2.0, 1.0, 2.0 / 3.0, 0.2, 0.05, 4.0}) {
    for (const double t : {1.0, 0.3, 7.0}) {
      const auto c = contour(q, t, 720);
      ASSERT_EQ(c.points.size(), 720u);
      for (const auto& p : c.points) {
        EXPECT_NEAR(lq_radius(p.x, p.y, q), t, 1e-9 * t) << q << ' ' << p.phi;
      }
    }
  }
}

TEST(Contour, AxisPointsAreExact) {
  const auto c = contour(2.0 / 3.0, 1.0, 8);
  EXPECT_EQ(c.points[0].x, 1.0);
  EXPECT_EQ(c.points[0].y, 0.0);
  EXPECT_EQ(c.points[2].x, 0.0);
  EXPECT_EQ(c.points[2].y, 1.0);
  EXPECT_EQ(c.points[4].x, -1.0);
  EXPECT_EQ(c.points[6].y, -1.0);
}

TEST(Contour, EqualCoordinatePointShrinksWithDepth) {
  double previous = INFINITY;
  for (const int layer : {1, 2, 3, 10}) {
    const double q = 2.0 / layer;
    const double e = equal_coordinate_point(q, 1.0);
    EXPECT_LT(e, previous);
    EXPECT_NEAR(lq_radius(e, e, q), 1.0, 1e-12);
    previous = e;
  }
  EXPECT_NEAR(equal_coordinate_point(2.0, 1.0), std::numbers::sqrt2 / 2.0, 1e-15);
}

TEST(Contour, Errors) {
  EXPECT_THROW(contour(2.0, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(contour(0.0, 1.0, 10), std::invalid_argument);
  EXPECT_THROW(contour(2.0, -1.0, 10), std::invalid_argument);
}

TEST(Contour, RadiusIsStableForTinyQ) {
  EXPECT_NEAR(lq_radius(1.0, 1.0, 0.01), std::pow(2.0, 100.0), 1e-6 * std::pow(2.0, 100.0));
  EXPECT_EQ(lq_radius(0.0, 0.0, 0.5), 0.0);
  EXPECT_NEAR(lq_radius(0.0, 3.0, 0.2), 3.0, 1e-15);
}
