#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spectral_edge/lanczos.hpp"
#include "spectral_edge/parallel.hpp"
#include "spectral_edge/rng.hpp"
#include "spectral_edge/stats.hpp"

using namespace spectral_edge;

TEST(Stats, NormalFunctions) {
  EXPECT_NEAR(stats::normal_cdf(0), 0.5, 1e-15);
  EXPECT_NEAR(stats::normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(stats::normal_quantile(0.95), 1.6448536269514722, 1e-10);
  for (double p : {0.001, 0.2, 0.5, 0.77, 0.999}) EXPECT_NEAR(stats::normal_cdf(stats::normal_quantile(p)), p, 1e-12);
}

TEST(Stats, MomentsAndQuantiles) {
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(xs), 2.5);
  EXPECT_DOUBLE_EQ(stats::variance(xs), 1.25);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(stats::interquartile_range(xs), 1.5);
  EXPECT_NEAR(stats::proportion_se(0.1, 2000), std::sqrt(0.09 / 2000), 1e-15);
}

TEST(Stats, KolmogorovSmirnov) {
  const std::vector<double> xs{0.1, 0.4, 0.7};
  const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  // Empirical steps 1/3, 2/3, 1 against 0.1, 0.4, 0.7.
  EXPECT_NEAR(stats::ks_distance(xs, uniform), 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(stats::ks_two_sample({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(stats::ks_two_sample({1, 2}, {3, 4}), 1.0);
  EXPECT_GT(stats::ks_pvalue(0.01, 100), 0.99);
  EXPECT_LT(stats::ks_pvalue(0.3, 1000), 1e-10);
  EXPECT_NEAR(stats::ks_pvalue(1.358 / std::sqrt(1000.0), 1000), 0.05, 0.01);
}

TEST(Stats, UniformSampleHasUniformKsPvalue) {
  auto rng = make_rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<double> xs(5000);
  for (auto& x : xs) x = u(rng);
  const double d = stats::ks_distance(xs, [](double x) { return std::clamp(x, 0.0, 1.0); });
  EXPECT_LT(d, 0.03);
}

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
  EXPECT_NE(derive_seed(1, {}), derive_seed(1, {0}));
}

TEST(Parallel, EveryIndexRunsOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 1000);
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Parallel, NestedCallsComplete) {
  std::atomic<int> total{0};
  parallel_for(8, [&](std::size_t) { parallel_for(8, [&](std::size_t) { total += 1; }, 4); }, 4);
  EXPECT_EQ(total.load(), 64);
}

TEST(Parallel, ExceptionsPropagate) {
  EXPECT_THROW(parallel_for(
                   50, [](std::size_t i) {
                     if (i == 17) throw std::runtime_error("boom");
                   },
                   3),
               std::runtime_error);
}

TEST(Lanczos, MatchesDiagonalSpectrum) {
  const std::size_t dim = 300;
  Eigen::VectorXd diag(dim);
  for (std::size_t i = 0; i < dim; ++i) diag(static_cast<Eigen::Index>(i)) = 1.0 + 0.01 * static_cast<double>(i);
  diag(5) = 50;
  diag(9) = 20;
  const auto op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = diag.cwiseProduct(x); };
  const auto top = lanczos_top(op, dim, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_NEAR(top[0], 50, 1e-9);
  EXPECT_NEAR(top[1], 20, 1e-9);
  EXPECT_NEAR(top[2], 1.0 + 0.01 * 299, 1e-8);
}
