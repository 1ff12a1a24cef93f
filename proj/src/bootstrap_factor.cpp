#include "spectral_edge/bootstrap_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "spectral_edge/errors.hpp"
#include "spectral_edge/lanczos.hpp"
#include "spectral_edge/parallel.hpp"
#include "spectral_edge/rng.hpp"
#include "spectral_edge/stats.hpp"

namespace spectral_edge {

void FactorTestConfig::validate() const {
  if (r0 < 1) throw ParameterError("FactorTestConfig: r0 must be at least 1");
  if (B < 1) throw ParameterError("FactorTestConfig: B must be positive");
  if (!(alpha > 0 && alpha < 1)) throw ParameterError("FactorTestConfig: alpha must lie in (0, 1)");
  if (!(m4 > 0)) throw ParameterError("FactorTestConfig: m4 must be positive");
}

double v_constant(double m4, const WeightLaw& law) {
  const auto mom = moments(law);
  const double v = m4 * mom.m4 - mom.m2 * mom.m2;
  if (!(v > 0)) throw ParameterError("v_constant: V = m4 E xi^4 - (E xi^2)^2 must be positive");
  return v;
}

namespace {

// Top k eigenvalues of Y diag(w) Y^T. `g` is Y^T Y when n < p (else unused).
std::vector<double> weighted_top(const Eigen::MatrixXd& y, const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                                 std::size_t k) {
  const auto p = y.rows();
  const auto n = y.cols();
  const bool row_side = p <= n;
  const auto dim = static_cast<std::size_t>(row_side ? p : n);
  Eigen::VectorXd tmp;
  Eigen::VectorXd sqrt_w;
  if (!row_side) sqrt_w = w.cwiseSqrt();
  auto op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    if (row_side) {
      tmp.noalias() = y.transpose() * x;
      tmp.array() *= w.array();
      out.noalias() = y * tmp;
    } else {
      tmp = sqrt_w.cwiseProduct(x);
      out.noalias() = g * tmp;
      out.array() *= sqrt_w.array();
    }
  };
  auto top = lanczos_top(op, dim, k);
  if (top.size() == k) return top;

  Eigen::MatrixXd m;
  if (row_side) {
    m = y * w.asDiagonal() * y.transpose();
  } else {
    m = sqrt_w.asDiagonal() * g * sqrt_w.asDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return {};
  std::vector<double> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(solver.eigenvalues()(static_cast<Eigen::Index>(dim - 1 - i)));
  return out;
}

}  // namespace

Eigen::MatrixXd bootstrap_top_eigs(const Eigen::MatrixXd& y, const WeightLaw& law, std::size_t B, std::size_t k,
                                   std::uint64_t root_seed) {
  const auto small = static_cast<std::size_t>(std::min(y.rows(), y.cols()));
  if (k < 1 || k > small) throw ParameterError("bootstrap_top_eigs: need 1 <= k <= min(p, n)");
  const auto n = static_cast<std::size_t>(y.cols());
  Eigen::MatrixXd g;
  if (y.rows() > y.cols()) g = y.transpose() * y;
  Eigen::MatrixXd mu(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(k));
  parallel_for(B, [&](std::size_t b) {
    const auto xi2 = sample_weights(law, n, derive_seed(root_seed, {b}));
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(xi2.data(), static_cast<Eigen::Index>(n));
    const auto top = weighted_top(y, g, w, k);
    for (std::size_t i = 0; i < k; ++i)
      mu(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) =
          top.size() == k ? top[i] : std::numeric_limits<double>::quiet_NaN();
  });
  return mu;
}

namespace {

std::size_t count_failed(const Eigen::VectorXd& column) {
  std::size_t failed = 0;
  for (double v : column)
    if (!std::isfinite(v)) ++failed;
  return failed;
}

void check_failures(std::size_t failed, std::size_t B) {
  if (static_cast<double>(failed) > 0.01 * static_cast<double>(B))
    throw NumericError("bootstrap: more than 1% of the replicate eigensolves failed");
}

}  // namespace

std::vector<double> bootstrap_eigs(const Eigen::MatrixXd& y, const WeightLaw& law, std::size_t B, std::size_t r0,
                                   std::uint64_t root_seed) {
  if (r0 < 1) throw ParameterError("bootstrap_eigs: r0 must be at least 1");
  const Eigen::MatrixXd mu = bootstrap_top_eigs(y, law, B, r0, root_seed);
  const Eigen::VectorXd col = mu.col(static_cast<Eigen::Index>(r0 - 1));
  check_failures(count_failed(col), B);
  return {col.data(), col.data() + col.size()};
}

FactorTestOutcome algorithm1_from_eigs(const Eigen::MatrixXd& mu, double lambda_hat, std::size_t n,
                                       const FactorTestConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(mu.cols()) < cfg.r0) throw ParameterError("algorithm1: too few bootstrap eigenvalues");
  if (!(lambda_hat > 0)) throw DegenerateSpectrumError("algorithm1: lambda_hat_{r0} is zero");
  const double m2 = moments(cfg.law).m2;
  const double scale = std::sqrt(static_cast<double>(n) / v_constant(cfg.m4, cfg.law));
  const double z = stats::normal_quantile(1.0 - cfg.alpha / 2.0);

  FactorTestOutcome out;
  out.lambda_hat = lambda_hat;
  out.degenerate = cfg.law.is_degenerate();
  const auto col = mu.col(static_cast<Eigen::Index>(cfg.r0 - 1));
  check_failures(count_failed(col), static_cast<std::size_t>(col.size()));
  for (double v : col) {
    if (!std::isfinite(v)) continue;
    const double t = scale * (v / lambda_hat - m2);
    out.t_values.push_back(t);
    if (std::abs(t) <= z) ++out.B_star;
  }
  out.B_used = out.t_values.size();
  out.p_value = 1.0 - static_cast<double>(out.B_star) / static_cast<double>(out.B_used);
  out.reject = out.p_value < cfg.alpha;
  return out;
}

FactorTestOutcome algorithm1_test(const Eigen::MatrixXd& y, const FactorTestConfig& cfg, std::uint64_t root_seed) {
  cfg.validate();
  const auto lambda = top_eigenvalues(y, cfg.r0);
  if (lambda.size() < cfg.r0) throw ParameterError("algorithm1: r0 exceeds min(p, n)");
  const double lambda_hat = lambda[cfg.r0 - 1];
  if (!(lambda_hat > 0)) throw DegenerateSpectrumError("algorithm1: lambda_hat_{r0} is zero");
  const auto mu = bootstrap_top_eigs(y, cfg.law, cfg.B, cfg.r0, root_seed);
  return algorithm1_from_eigs(mu, lambda_hat, static_cast<std::size_t>(y.cols()), cfg);
}

std::size_t estimate_r_factor(const Eigen::MatrixXd& y, const FactorTestConfig& cfg_template, std::size_t r_star,
                              std::uint64_t root_seed) {
  if (r_star == 0) return 0;
  const auto small = static_cast<std::size_t>(std::min(y.rows(), y.cols()));
  if (r_star > small) throw ParameterError("estimate_r_factor: r_star exceeds min(p, n)");
  const auto lambda = top_eigenvalues(y, r_star);
  const auto mu = bootstrap_top_eigs(y, cfg_template.law, cfg_template.B, r_star, root_seed);
  std::size_t best = 0;
  for (std::size_t r0 = 1; r0 <= r_star; ++r0) {
    FactorTestConfig cfg = cfg_template;
    cfg.r0 = r0;
    if (!(lambda[r0 - 1] > 0)) break;
    if (!algorithm1_from_eigs(mu, lambda[r0 - 1], static_cast<std::size_t>(y.cols()), cfg).reject) best = r0;
  }
  return best;
}

FactorData build_factor_data(std::size_t p, std::size_t n, double delta, const std::vector<double>& loadings_cov,
                             std::uint64_t seed) {
  if (p == 0 || n == 0) throw ParameterError("build_factor_data: p and n must be positive");
  if (loadings_cov.empty()) throw ParameterError("build_factor_data: need at least one factor");
  for (double c : loadings_cov)
    if (!(c > 0)) throw ParameterError("build_factor_data: loading variances must be positive");
  if (!(delta >= 0)) throw ParameterError("build_factor_data: delta must be nonnegative");

  const auto P = static_cast<Eigen::Index>(p);
  const auto N = static_cast<Eigen::Index>(n);
  const auto r = static_cast<Eigen::Index>(loadings_cov.size());
  std::normal_distribution<double> normal;
  auto fill = [&](Eigen::MatrixXd& m, std::uint64_t stream) {
    Rng rng = make_rng(derive_seed(seed, {stream}));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  };

  FactorData out;
  out.loadings.resize(P, r);
  fill(out.loadings, 1);
  for (Eigen::Index k = 0; k < r; ++k) out.loadings.col(k) *= std::sqrt(loadings_cov[static_cast<std::size_t>(k)]);
  Eigen::MatrixXd f(r, N);
  fill(f, 2);
  Eigen::MatrixXd e(P, N);
  fill(e, 3);

  Eigen::MatrixXd y = e;
  if (delta > 0) y.noalias() += delta * out.loadings * f;
  y /= std::sqrt(static_cast<double>(n));

  out.sample = DataSample{std::move(y), std::vector<double>(n, 1.0), SeparableIid{}, PopulationSpec::identity(p),
                          std::nullopt};
  out.true_r = delta > 0 ? loadings_cov.size() : 0;
  return out;
}

}  // namespace spectral_edge
