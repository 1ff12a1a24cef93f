#pragma once

// Multiplier bootstrap for the leading eigenvalues of a factor-model sample
// covariance, the resampling test of H0: r >= r0 and the resulting factor
// count estimator.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spectral_edge/matrix_model.hpp"
#include "spectral_edge/weight_laws.hpp"

namespace spectral_edge {

struct FactorTestConfig {
  std::size_t r0 = 1;
  std::size_t B = 1000;
  double alpha = 0.1;
  WeightLaw law = WeightLaw::exponential(1.0);  // multiplier distribution of xi^2
  double m4 = 3.0;                               // E (sqrt(n) x_11)^4 of the data entries

  void validate() const;
};

// V = m4 E xi^4 - (E xi^2)^2; throws if V <= 0.
double v_constant(double m4, const WeightLaw& law);

// B x k matrix whose row b holds the top k eigenvalues of Y D_b^2 Y^T for
// independent multipliers D_b^2 = diag(xi^2). Replicate b uses
// derive_seed(root_seed, {b}). Rows of failed eigensolves are NaN.
Eigen::MatrixXd bootstrap_top_eigs(const Eigen::MatrixXd& y, const WeightLaw& law, std::size_t B, std::size_t k,
                                   std::uint64_t root_seed);

// mu_{b, r0}, b = 1..B. Throws NumericError when more than 1% of the
// replicates fail.
std::vector<double> bootstrap_eigs(const Eigen::MatrixXd& y, const WeightLaw& law, std::size_t B, std::size_t r0,
                                   std::uint64_t root_seed);
inline std::vector<double> bootstrap_eigs(const DataSample& data, const WeightLaw& law, std::size_t B,
                                          std::size_t r0, std::uint64_t root_seed) {
  return bootstrap_eigs(data.y, law, B, r0, root_seed);
}

struct FactorTestOutcome {
  double p_value = 0;
  bool reject = false;
  std::size_t B_star = 0;
  std::size_t B_used = 0;
  double lambda_hat = 0;             // r0-th eigenvalue of Y Y^T
  std::vector<double> t_values;      // sqrt(n / V) (mu_b / lambda_hat - E xi^2)
  bool degenerate = false;           // multiplier law has zero variance
};

// p = 1 - B* / B with B* = #{b : |T_b| <= z_{1 - alpha/2}}; rejects iff p < alpha.
FactorTestOutcome algorithm1_test(const Eigen::MatrixXd& y, const FactorTestConfig& cfg, std::uint64_t root_seed);
inline FactorTestOutcome algorithm1_test(const DataSample& data, const FactorTestConfig& cfg,
                                         std::uint64_t root_seed) {
  return algorithm1_test(data.y, cfg, root_seed);
}

// Same test from precomputed bootstrap eigenvalues (column r0 - 1 of `mu`).
FactorTestOutcome algorithm1_from_eigs(const Eigen::MatrixXd& mu, double lambda_hat, std::size_t n,
                                       const FactorTestConfig& cfg);

// Largest r0 in 1..r_star whose test accepts, 0 if none does. All r0 share
// one set of bootstrap multipliers.
std::size_t estimate_r_factor(const Eigen::MatrixXd& y, const FactorTestConfig& cfg_template, std::size_t r_star,
                              std::uint64_t root_seed);

struct FactorData {
  DataSample sample;           // y = (delta L' F + E) / sqrt(n)
  Eigen::MatrixXd loadings;    // L', p x r
  std::size_t true_r = 0;      // r when delta > 0, else 0
};

// Loading rows ~ N(0, diag(loadings_cov)); F and E standard Gaussian.
FactorData build_factor_data(std::size_t p, std::size_t n, double delta, const std::vector<double>& loadings_cov,
                             std::uint64_t seed);

}  // namespace spectral_edge
