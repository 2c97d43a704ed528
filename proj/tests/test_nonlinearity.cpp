#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "unitprior/nonlinearity.hpp"

using namespace unitprior;

TEST(Nonlinearity, FamilyValues) {
  EXPECT_EQ(NonlinearitySpec::relu()(-2.0), 0.0);
  EXPECT_EQ(NonlinearitySpec::relu()(3.0), 3.0);
  EXPECT_DOUBLE_EQ(NonlinearitySpec::prelu(0.1)(-2.0), -0.2);
  EXPECT_DOUBLE_EQ(NonlinearitySpec::elu(1.0)(-1.0), std::expm1(-1.0));
  EXPECT_DOUBLE_EQ(NonlinearitySpec::selu()(1.0), NonlinearitySpec::kSeluLambda);
  EXPECT_DOUBLE_EQ(NonlinearitySpec::selu()(-1.0),
                   NonlinearitySpec::kSeluLambda * NonlinearitySpec::kSeluAlpha * std::expm1(-1.0));
  EXPECT_DOUBLE_EQ(NonlinearitySpec::tanh()(0.5), std::tanh(0.5));
  EXPECT_DOUBLE_EQ(NonlinearitySpec::sigmoid()(0.0), 0.5);
  EXPECT_EQ(NonlinearitySpec::identity()(-7.5), -7.5);
}

TEST(Nonlinearity, RejectsBadParameters) {
  EXPECT_THROW(NonlinearitySpec::prelu(-0.1), std::invalid_argument);
  EXPECT_THROW(NonlinearitySpec::elu(0.0), std::invalid_argument);
  EXPECT_THROW(NonlinearitySpec::selu(-1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(NonlinearitySpec::parse("swish", {}), std::invalid_argument);
  EXPECT_THROW(NonlinearitySpec::parse("prelu", {}), std::invalid_argument);
  EXPECT_THROW(apply(NonlinearitySpec::relu(), std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(apply(NonlinearitySpec::relu(), std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(Nonlinearity, ParseRoundTrip) {
  for (const auto& spec : {NonlinearitySpec::relu(), NonlinearitySpec::prelu(0.1), NonlinearitySpec::elu(0.5),
                           NonlinearitySpec::selu(), NonlinearitySpec::tanh(), NonlinearitySpec::sigmoid(),
                           NonlinearitySpec::identity()}) {
    const auto params = spec.params();
    EXPECT_EQ(NonlinearitySpec::parse(spec.name(), params), spec) << spec.to_string();
  }
  EXPECT_EQ(NonlinearitySpec::prelu(0.1).to_string(), "prelu(0.1)");
}

TEST(Nonlinearity, HomogeneityFlagMatchesBehaviour) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> u(0.0, 3.0);
  std::uniform_real_distribution<double> c(0.01, 100.0);
  for (const auto& spec : {NonlinearitySpec::relu(), NonlinearitySpec::prelu(0.2), NonlinearitySpec::identity()}) {
    ASSERT_TRUE(spec.positively_homogeneous());
    for (int i = 0; i < 1000; ++i) {
      const double x = u(rng);
      const double s = c(rng);
      EXPECT_NEAR(spec(s * x), s * spec(x), 1e-12 * std::abs(s * x) + 1e-300);
    }
  }
  EXPECT_FALSE(NonlinearitySpec::elu().positively_homogeneous());
  EXPECT_FALSE(NonlinearitySpec::tanh().positively_homogeneous());
}

TEST(Envelope, SearchVerdictsOnStandardFamilies) {
  const EnvelopeGrid grid{1e-3, 1e3, 20000};
  for (const auto& spec : {NonlinearitySpec::relu(), NonlinearitySpec::prelu(0.1), NonlinearitySpec::elu(1.0),
                           NonlinearitySpec::selu(1.0507, 1.6733)}) {
    const auto r = search_envelope_constants(spec, grid);
    EXPECT_EQ(r.outcome, EnvelopeOutcome::Holds) << spec.to_string();
    ASSERT_TRUE(r.witness.has_value());
    EXPECT_TRUE(verify_envelope(spec, r.witness->constants, grid).holds());
  }
  for (const auto& spec : {NonlinearitySpec::tanh(), NonlinearitySpec::sigmoid()}) {
    const auto r = search_envelope_constants(spec, grid);
    EXPECT_EQ(r.outcome, EnvelopeOutcome::Bounded) << spec.to_string();
    EXPECT_FALSE(r.witness.has_value());
  }
}

TEST(Envelope, ReluConstantsAreTight) {
  const auto r = search_envelope_constants(NonlinearitySpec::relu(), {1e-3, 1e3, 10000});
  ASSERT_TRUE(r.witness);
  const auto& k = r.witness->constants;
  EXPECT_EQ(k.side, Side::PositiveAxis);
  EXPECT_DOUBLE_EQ(k.d1, 1.0);
  EXPECT_DOUBLE_EQ(k.c1, 0.0);
  EXPECT_DOUBLE_EQ(k.d2, 1.0);
  EXPECT_DOUBLE_EQ(k.c2, 0.0);
}

TEST(Envelope, VerifyReportsFirstViolation) {
  EnvelopeConstants k;
  k.d1 = 1.0;
  k.side = Side::NegativeAxis;  // relu is 0 there
  const auto w = verify_envelope(NonlinearitySpec::relu(), k, {1e-3, 1e3, 10000});
  ASSERT_FALSE(w.holds());
  EXPECT_EQ(w.violation->which, Inequality::Lower);
  EXPECT_LT(w.violation->u, 0.0);

  EnvelopeConstants upper;
  upper.d1 = 0.5;
  upper.d2 = 0.5;  // relu grows faster than u / 2
  const auto w2 = verify_envelope(NonlinearitySpec::relu(), upper, {1e-3, 1e3, 10000});
  ASSERT_FALSE(w2.holds());
  EXPECT_EQ(w2.violation->which, Inequality::Upper);
}

TEST(Envelope, GridValidation) {
  EXPECT_THROW((EnvelopeGrid{1e-3, 10.0, 100000}.points()), std::invalid_argument);
  EXPECT_THROW((EnvelopeGrid{1e-3, 1e3, 100}.points()), std::invalid_argument);
  const auto pts = EnvelopeGrid{1e-3, 1e3, 10000}.points();
  EXPECT_EQ(pts.size(), 20001u);
  EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));
  EXPECT_EQ(pts[10000], 0.0);
}

TEST(Nonlinearity, SymmetrySpotChecks) {
  const auto id = NonlinearitySpec::identity();
  const auto th = NonlinearitySpec::tanh();
  const auto sg = NonlinearitySpec::sigmoid();
  for (double u : {0.0, 0.3, 1.7, 12.0, 300.0}) {
    EXPECT_EQ(id(-u), -id(u));
    EXPECT_NEAR(th(-u), -th(u), 1e-15);
    EXPECT_NEAR(sg(-u), 1.0 - sg(u), 1e-15);
  }
}

TEST(Envelope, TanhFailsUnitLowerBound) {
  const EnvelopeConstants k{0.0, 1.0, Side::PositiveAxis, 0.0, 1.0};
  EXPECT_FALSE(verify_envelope(NonlinearitySpec::tanh(), k).holds());
  EXPECT_FALSE(verify_envelope(NonlinearitySpec::tanh(), {0.0, 1.0, Side::NegativeAxis, 0.0, 1.0}).holds());
}

TEST(Envelope, PreluUnitConstantsHold) {
  const auto w = verify_envelope(NonlinearitySpec::prelu(0.1), {0.0, 1.0, Side::PositiveAxis, 0.0, 1.0});
  EXPECT_TRUE(w.holds());
}

TEST(Envelope, SeluSearchRecoversScale) {
  const auto s = search_envelope_constants(NonlinearitySpec::selu());
  ASSERT_EQ(s.outcome, EnvelopeOutcome::Holds);
  ASSERT_TRUE(s.witness.has_value());
  EXPECT_EQ(s.witness->constants.side, Side::PositiveAxis);
  EXPECT_NEAR(s.witness->constants.d1, NonlinearitySpec::kSeluLambda, 1e-9);
  EXPECT_GE(s.witness->constants.d2, NonlinearitySpec::kSeluLambda);
}
