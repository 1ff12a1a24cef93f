#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

namespace spectral_edge {

// y = A x for a symmetric positive semidefinite operator A.
using SymmetricOperator = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

// Largest k eigenvalues of A (descending) by Lanczos with full
// reorthogonalization. Returns an empty vector if the Krylov space breaks
// down before k Ritz values converge (callers then use a dense solver).
std::vector<double> lanczos_top(const SymmetricOperator& op, std::size_t dim, std::size_t k,
                                double rel_tol = 1e-12);

}  // namespace spectral_edge
