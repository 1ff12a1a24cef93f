#include "spectral_edge/lanczos.hpp"

#include <algorithm>
#include <cmath>

#include "spectral_edge/rng.hpp"

namespace spectral_edge {

std::vector<double> lanczos_top(const SymmetricOperator& op, std::size_t dim, std::size_t k, double rel_tol) {
  if (k == 0 || dim == 0) return {};
  const std::size_t max_steps = std::min<std::size_t>(dim, std::max<std::size_t>(400, 8 * k));
  const auto d = static_cast<Eigen::Index>(dim);

  Eigen::MatrixXd basis(d, static_cast<Eigen::Index>(max_steps + 1));
  std::vector<double> alpha, beta;
  alpha.reserve(max_steps);
  beta.reserve(max_steps);

  auto rng = make_rng(0x1a2c05ULL + dim);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(d);
  for (auto& x : v) x = normal(rng);
  basis.col(0) = v / v.norm();

  Eigen::VectorXd w(d);
  double scale = 0.0;
  for (std::size_t j = 0; j < max_steps; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    op(basis.col(jj), w);
    const double a = basis.col(jj).dot(w);
    alpha.push_back(a);
    auto done = basis.leftCols(jj + 1);
    for (int pass = 0; pass < 2; ++pass) w.noalias() -= done * (done.transpose() * w);
    const double b = w.norm();
    beta.push_back(b);
    scale = std::max(scale, std::abs(a) + b);

    const bool breakdown = b <= 1e-13 * std::max(scale, 1e-300);
    const std::size_t m = j + 1;
    if (m >= k && (breakdown || m % 5 == 0 || m == max_steps)) {
      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(m));
      Eigen::VectorXd sub(static_cast<Eigen::Index>(m > 1 ? m - 1 : 0));
      for (std::size_t i = 0; i + 1 < m; ++i) sub[static_cast<Eigen::Index>(i)] = beta[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const auto& theta = tri.eigenvalues();
      const auto& s = tri.eigenvectors();
      const auto last = static_cast<Eigen::Index>(m - 1);
      const double top = std::abs(theta[last]);
      bool converged = true;
      for (std::size_t i = 0; i < k; ++i) {
        const auto col = last - static_cast<Eigen::Index>(i);
        if (std::abs(b * s(last, col)) > rel_tol * std::max(top, 1e-300)) converged = false;
      }
      if (breakdown && !converged && m == dim) converged = true;
      if (converged) {
        std::vector<double> out(k);
        for (std::size_t i = 0; i < k; ++i) out[i] = theta[last - static_cast<Eigen::Index>(i)];
        return out;
      }
      if (breakdown) return {};
    } else if (breakdown) {
      return {};
    }
    basis.col(jj + 1) = w / b;
  }
  return {};
}

}  // namespace spectral_edge
