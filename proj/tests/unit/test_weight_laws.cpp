#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spectral_edge/errors.hpp"
#include "spectral_edge/rng.hpp"
#include "spectral_edge/stats.hpp"
#include "spectral_edge/weight_laws.hpp"

using namespace spectral_edge;

TEST(WeightLaws, ParetoSamplesRespectSupport) {
  const auto xs = sample_weights(WeightLaw::pareto(0.75, 3), 5, 7);
  ASSERT_EQ(xs.size(), 5u);
  for (double x : xs) EXPECT_GE(x, 0.75);
}

TEST(WeightLaws, ScaledBetaMeanAndSupport) {
  const auto xs = sample_weights(WeightLaw::scaled_beta(1, 1, 3), 100000, 11);
  EXPECT_LT(*std::max_element(xs.begin(), xs.end()), 1.0);
  EXPECT_NEAR(stats::mean(xs), 0.25, 0.01);
}

TEST(WeightLaws, ExponentialSampleMean) {
  const auto xs = sample_weights(WeightLaw::exponential(1), 100000, 12);
  EXPECT_NEAR(stats::mean(xs), 1.0, 0.02);
}

TEST(WeightLaws, SamplerIsDeterministicGivenSeed) {
  const auto law = WeightLaw::gamma(5, 5);
  EXPECT_EQ(sample_weights(law, 50, 99), sample_weights(law, 50, 99));
  EXPECT_NE(sample_weights(law, 50, 99), sample_weights(law, 50, 100));
}

TEST(WeightLaws, ClosedFormMoments) {
  const auto e = moments(WeightLaw::exponential(1));
  EXPECT_DOUBLE_EQ(e.m2, 1.0);
  EXPECT_DOUBLE_EQ(e.m4, 2.0);
  const auto c = moments(WeightLaw::chi_squared(1));
  EXPECT_DOUBLE_EQ(c.m2, 1.0);
  EXPECT_DOUBLE_EQ(c.m4, 3.0);
  const auto g = moments(WeightLaw::gamma(15, 15));
  EXPECT_NEAR(g.m2, 1.0, 1e-14);
  EXPECT_NEAR(g.m4, 16.0 / 15.0, 1e-14);
}

TEST(WeightLaws, SampleMomentsMatchDeclaredMoments) {
  for (const auto& law : {WeightLaw::gamma(5, 5), WeightLaw::chi_squared(2), WeightLaw::scaled_beta(2, 2, 3),
                          WeightLaw::uniform(3), WeightLaw::pareto(1, 5)}) {
    const auto xs = sample_weights(law, 200000, 5);
    const auto m = moments(law);
    const double se = std::sqrt((m.m4 - m.m2 * m.m2) / xs.size());
    EXPECT_NEAR(stats::mean(xs), m.m2, 5 * se) << law.name();
  }
}

TEST(WeightLaws, QuadratureAgreesWithClosedForms) {
  // E X^2 for Gamma(5, 5) is shape (shape + 1) / rate^2.
  EXPECT_NEAR(WeightLaw::gamma(5, 5).expect([](double s) { return s * s; }), 30.0 / 25.0, 1e-9);
  // E 1 / (1 + X) for Uniform(0, 1) is log 2.
  EXPECT_NEAR(WeightLaw::uniform(1).expect([](double s) { return 1.0 / (1.0 + s); }), std::log(2.0), 1e-10);
  // Pareto(1, 3): E X = 3/2.
  EXPECT_NEAR(WeightLaw::pareto(1, 3).expect([](double s) { return s; }), 1.5, 1e-9);
  // Beta(1, 3): E X^2 = a (a + 1) / ((a + b)(a + b + 1)) = 1/10.
  EXPECT_NEAR(WeightLaw::scaled_beta(1, 1, 3).expect([](double s) { return s * s; }), 0.1, 1e-10);
}

TEST(WeightLaws, AssumptionViolationsNeedExplicitFlag) {
  EXPECT_THROW(WeightLaw::pareto(1, 1.5), ParameterError);
  EXPECT_THROW(WeightLaw::squared_student_t(3), ParameterError);
  const auto t3 = WeightLaw::squared_student_t(3, true);
  EXPECT_TRUE(t3.assumption_violating());
  EXPECT_FALSE(WeightLaw::squared_student_t(5).assumption_violating());
  EXPECT_THROW(WeightLaw::gamma(-1, 1), ParameterError);
  EXPECT_THROW(WeightLaw::scaled_beta(1, 1, 0), ParameterError);
}

TEST(WeightLaws, InfiniteFourthMomentIsReported) {
  EXPECT_THROW(moments(WeightLaw::squared_student_t(3, true)), MomentUndefinedError);
  EXPECT_THROW(moments(WeightLaw::squared_student_t(4)), MomentUndefinedError);
  EXPECT_THROW(moments(WeightLaw::pareto(1, 2)), MomentUndefinedError);
  EXPECT_NO_THROW(moments(WeightLaw::pareto(1, 3)));
  EXPECT_NEAR(first_moment(WeightLaw::squared_student_t(3, true)), 3.0, 1e-12);
}

TEST(WeightLaws, TailThresholdExamples) {
  EXPECT_NEAR(tail_threshold_b_n(WeightLaw::pareto(0.75, 3), 1000), 7.5, 1e-10);
  EXPECT_NEAR(tail_threshold_b_n(WeightLaw::exponential(1), 1000), std::log(1000.0), 1e-10);
  EXPECT_NEAR(tail_threshold_b_n(WeightLaw::pareto(2.5, 4), 1), 2.5, 1e-12);
  EXPECT_THROW(tail_threshold_b_n(WeightLaw::scaled_beta(1, 1, 3), 100), UnsupportedTailError);
}

TEST(WeightLaws, TailThresholdSolvesSurvivalEquation) {
  for (const auto& law : {WeightLaw::gamma(5, 5), WeightLaw::chi_squared(1), WeightLaw::squared_student_t(5),
                          WeightLaw::exponential(2)}) {
    for (std::size_t n : {10u, 400u, 100000u}) {
      const double b = tail_threshold_b_n(law, n);
      EXPECT_NEAR(law.survival(b) * static_cast<double>(n), 1.0, 1e-8) << law.name() << " n=" << n;
      // P(xi^2 > g^{-1}(log n)) = 1/n with g = -log survival.
      EXPECT_NEAR(law.tail_rate(b), std::log(static_cast<double>(n)), 1e-8);
    }
  }
}

TEST(WeightLaws, TailThresholdMonotoneInN) {
  for (const auto& law : {WeightLaw::pareto(0.75, 3), WeightLaw::gamma(5, 5), WeightLaw::exponential(1),
                          WeightLaw::squared_student_t(3, true), WeightLaw::chi_squared(1)}) {
    double prev = tail_threshold_b_n(law, 2);
    for (std::size_t n = 3; n < 5000; n = n * 3 / 2 + 1) {
      const double b = tail_threshold_b_n(law, n);
      EXPECT_GE(b, prev) << law.name();
      prev = b;
    }
  }
}

TEST(WeightLaws, EvtLimitExamples) {
  const auto fr = evt_limit(WeightLaw::pareto(0.75, 3), 1000);
  EXPECT_EQ(fr.family, EvtFamily::Frechet);
  EXPECT_DOUBLE_EQ(fr.shape, 3);
  EXPECT_DOUBLE_EQ(fr.center, 0);
  EXPECT_NEAR(fr.scale, 7.5, 1e-10);

  const auto gu = evt_limit(WeightLaw::exponential(1), 1000);
  EXPECT_EQ(gu.family, EvtFamily::Gumbel);
  EXPECT_NEAR(gu.center, std::log(1000.0), 1e-10);
  EXPECT_NEAR(gu.scale, 1.0, 1e-12);

  const auto wb = evt_limit(WeightLaw::scaled_beta(1, 1, 3), 1000);
  EXPECT_EQ(wb.family, EvtFamily::Weibull);
  EXPECT_DOUBLE_EQ(wb.shape, 3);
  EXPECT_DOUBLE_EQ(wb.center, 1);
  EXPECT_NEAR(wb.scale, 0.1, 1e-12);
}

TEST(WeightLaws, ExponentialTailRateDerivative) {
  EXPECT_DOUBLE_EQ(WeightLaw::exponential(2.5).tail_rate_derivative(3.0), 2.5);
  // Gamma(1, r) is Exp(r): the numerical derivative must agree.
  EXPECT_NEAR(WeightLaw::gamma(1, 2.5).tail_rate_derivative(3.0), 2.5, 1e-6);
}

TEST(WeightLaws, BoundedTailEdgeConstantBand) {
  for (const auto& law : {WeightLaw::scaled_beta(1, 1, 3), WeightLaw::scaled_beta(2, 2, 3), WeightLaw::uniform(1.5)}) {
    const auto tail = std::get<BoundedTail>(law.tail_class());
    for (double gap = 0.05; gap >= 1e-4; gap /= 2) {
      const double x = tail.l - gap;
      const double ratio = law.survival(x) / std::pow(tail.l - x, tail.d + 1);
      EXPECT_GE(ratio, tail.edge_constant / 2) << law.name();
      EXPECT_LE(ratio, tail.edge_constant * 2) << law.name();
    }
  }
  const auto beta = std::get<BoundedTail>(WeightLaw::scaled_beta(1, 1, 3).tail_class());
  EXPECT_NEAR(beta.edge_constant, 1.0, 1e-12);
  EXPECT_NEAR(beta.d, 2.0, 1e-12);
}

TEST(WeightLaws, PolynomialTailRatioStable) {
  // x^alpha P(xi^2 > x) settles to a constant.
  const auto law = WeightLaw::squared_student_t(5);
  const double a = 2.5;
  const double r1 = std::pow(1e4, a) * law.survival(1e4);
  const double r2 = std::pow(1e6, a) * law.survival(1e6);
  EXPECT_NEAR(r1 / r2, 1.0, 0.01);
}

namespace {

double max_ks(const WeightLaw& law, std::size_t n, std::size_t reps, std::uint64_t seed) {
  const auto lim = evt_limit(law, n);
  std::vector<double> z(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    const auto xs = sample_weights(law, n, derive_seed(seed, {k}));
    z[k] = lim.standardize(*std::max_element(xs.begin(), xs.end()));
  }
  return stats::ks_distance(z, [&](double x) { return lim.limit_cdf(x); });
}

}  // namespace

TEST(WeightLaws, EmpiricalMaximaApproachEvtLimit) {
  for (const auto& law : {WeightLaw::pareto(0.75, 3), WeightLaw::scaled_beta(1, 1, 3)}) {
    const double small = max_ks(law, 200, 2000, 1);
    const double large = max_ks(law, 2000, 2000, 2);
    EXPECT_LE(large, 0.08) << law.name();
    EXPECT_LE(large, small + 0.01) << law.name();
  }
}

TEST(WeightLaws, ExponentialTopSpacingsAreExponential) {
  // The i-th spacing from the top of n Exp(t) draws is Exp(i t).
  const double t = 2.0;
  const auto law = WeightLaw::exponential(t);
  const std::size_t reps = 2000, n = 400, k = 6;
  std::vector<std::vector<double>> spacings(k);
  for (std::size_t r = 0; r < reps; ++r) {
    auto xs = sample_weights(law, n, derive_seed(77, {r}));
    std::partial_sort(xs.begin(), xs.begin() + k + 1, xs.end(), std::greater<>());
    for (std::size_t i = 0; i < k; ++i) spacings[i].push_back(xs[i] - xs[i + 1]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double rate = t * static_cast<double>(i + 1);
    const double d = stats::ks_distance(spacings[i], [&](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-rate * x); });
    EXPECT_GT(stats::ks_pvalue(d, reps), 0.001) << "index " << i + 1;
  }
}

TEST(WeightLaws, NamesAndDegeneracy) {
  EXPECT_EQ(WeightLaw::pareto(0.75, 3).name(), "pareto(0.75,3)");
  EXPECT_TRUE(WeightLaw::point_mass(1).is_degenerate());
  EXPECT_TRUE(WeightLaw::uniform(1).has_bounded_support());
  EXPECT_FALSE(WeightLaw::gamma(2, 1).has_bounded_support());
  EXPECT_THROW(evt_limit(WeightLaw::point_mass(1), 10), ParameterError);
}
