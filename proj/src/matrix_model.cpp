#include "spectral_edge/matrix_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spectral_edge/errors.hpp"
#include "spectral_edge/lanczos.hpp"
#include "spectral_edge/rng.hpp"

namespace spectral_edge {

namespace {

constexpr std::size_t kDenseLimit = 400;

void check_population(const PopulationSpec& pop) {
  if (pop.sigmas.empty()) throw ParameterError("sample_data: empty population");
  for (double s : pop.sigmas)
    if (!(s > 0)) throw ParameterError("sample_data: population eigenvalues must be positive");
}

std::vector<double> descending_clipped(const Eigen::VectorXd& ascending) {
  std::vector<double> out(ascending.data(), ascending.data() + ascending.size());
  std::reverse(out.begin(), out.end());
  const double cut = out.empty() ? 0.0 : 1e-12 * std::max(out.front(), 0.0);
  for (auto& v : out)
    if (v < cut) v = 0.0;
  return out;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& y) {
  // Smaller side: Y^T Y when n <= p, else Y Y^T.
  if (y.cols() <= y.rows()) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(y.cols(), y.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose());
    return g.selfadjointView<Eigen::Lower>();
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(y.rows(), y.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(y);
  return g.selfadjointView<Eigen::Lower>();
}

Eigen::VectorXd dense_eigenvalues(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "symmetric eigensolver did not converge (dimension " << g.rows() << ", max |entry| "
       << g.cwiseAbs().maxCoeff() << ", trace " << g.trace() << ")";
    throw NumericError(os.str());
  }
  return solver.eigenvalues();
}

}  // namespace

double SeparableIid::m4() const {
  switch (entry) {
    case EntryDist::Gaussian:
      return 3.0;
    case EntryDist::Rademacher:
      return 1.0;
    case EntryDist::StudentT:
      return 3.0 * (nu - 2) / (nu - 4);
  }
  return 3.0;
}

DataSample sample_data(const ModelKind& kind, const PopulationSpec& pop, const WeightLaw& law, std::size_t n,
                       std::uint64_t seed) {
  auto weights = sample_weights(law, n, derive_seed(seed, {1}));
  auto data = sample_data_with_weights(kind, pop, std::move(weights), seed);
  data.law = law;
  return data;
}

DataSample sample_data_with_weights(const ModelKind& kind, const PopulationSpec& pop, std::vector<double> weights,
                                    std::uint64_t seed) {
  check_population(pop);
  const auto p = static_cast<Eigen::Index>(pop.p());
  const auto n = static_cast<Eigen::Index>(weights.size());
  if (n == 0) throw ParameterError("sample_data: n must be at least 1");
  if (const auto* sep = std::get_if<SeparableIid>(&kind)) {
    if (sep->entry == EntryDist::StudentT && sep->nu < 9)
      throw ParameterError("sample_data: StudentT entries need nu >= 9");
  }

  auto rng = make_rng(derive_seed(seed, {2}));
  Eigen::MatrixXd y(p, n);
  std::normal_distribution<double> normal;

  if (is_elliptical(kind)) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto col = y.col(j);
      for (auto& v : col) v = normal(rng);
      col /= col.norm();
    }
  } else {
    const auto& sep = std::get<SeparableIid>(kind);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    switch (sep.entry) {
      case EntryDist::Gaussian:
        for (Eigen::Index j = 0; j < n; ++j)
          for (Eigen::Index i = 0; i < p; ++i) y(i, j) = normal(rng) * inv_sqrt_n;
        break;
      case EntryDist::Rademacher: {
        std::bernoulli_distribution coin(0.5);
        for (Eigen::Index j = 0; j < n; ++j)
          for (Eigen::Index i = 0; i < p; ++i) y(i, j) = (coin(rng) ? 1.0 : -1.0) * inv_sqrt_n;
        break;
      }
      case EntryDist::StudentT: {
        std::student_t_distribution<double> t(sep.nu);
        const double sd = std::sqrt(sep.nu / (sep.nu - 2));
        for (Eigen::Index j = 0; j < n; ++j)
          for (Eigen::Index i = 0; i < p; ++i) y(i, j) = t(rng) / sd * inv_sqrt_n;
        break;
      }
    }
  }

  for (Eigen::Index i = 0; i < p; ++i) {
    const double s = std::sqrt(pop.sigmas[static_cast<std::size_t>(i)]);
    if (s != 1.0) y.row(i) *= s;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = weights[static_cast<std::size_t>(j)];
    if (!(w >= 0)) throw ParameterError("sample_data: weights must be nonnegative");
    y.col(j) *= std::sqrt(w);
  }
  return DataSample{std::move(y), std::move(weights), kind, pop, std::nullopt};
}

Spectrum eigenvalues(const Eigen::MatrixXd& y) {
  Spectrum out;
  out.p = static_cast<std::size_t>(y.rows());
  out.n = static_cast<std::size_t>(y.cols());
  out.values = descending_clipped(dense_eigenvalues(gram(y)));
  return out;
}

std::vector<double> top_eigenvalues_symmetric(const Eigen::MatrixXd& g, std::size_t k) {
  const auto dim = static_cast<std::size_t>(g.rows());
  k = std::min(k, dim);
  if (dim > kDenseLimit) {
    auto op = [&g](const Eigen::VectorXd& x, Eigen::VectorXd& out) { out.noalias() = g.selfadjointView<Eigen::Lower>() * x; };
    auto top = lanczos_top(op, dim, k);
    if (top.size() == k) {
      for (auto& v : top) v = std::max(v, 0.0);
      return top;
    }
  }
  auto all = descending_clipped(dense_eigenvalues(g));
  all.resize(k);
  return all;
}

std::vector<double> top_eigenvalues(const Eigen::MatrixXd& y, std::size_t k) {
  const auto small = static_cast<std::size_t>(std::min(y.rows(), y.cols()));
  k = std::min(k, small);
  if (small > kDenseLimit) {
    // Operator on the smaller side without forming the Gram matrix.
    const bool cols_side = y.cols() <= y.rows();
    Eigen::VectorXd tmp;
    auto op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
      if (cols_side) {
        tmp.noalias() = y * x;
        out.noalias() = y.transpose() * tmp;
      } else {
        tmp.noalias() = y.transpose() * x;
        out.noalias() = y * tmp;
      }
    };
    auto top = lanczos_top(op, small, k);
    if (top.size() == k) {
      for (auto& v : top) v = std::max(v, 0.0);
      return top;
    }
  }
  auto all = eigenvalues(y).values;
  all.resize(k);
  return all;
}

std::complex<double> empirical_stieltjes(const Spectrum& spec, std::complex<double> z, GramSide side) {
  if (!(z.imag() > 0)) throw ParameterError("empirical_stieltjes: Im z must be positive");
  const std::size_t dim = side == GramSide::Q ? spec.p : spec.n;
  if (dim == 0) throw ParameterError("empirical_stieltjes: empty spectrum");
  std::complex<double> sum = 0.0;
  for (double l : spec.values) sum += 1.0 / (l - z);
  const std::size_t zeros = dim > spec.values.size() ? dim - spec.values.size() : 0;
  sum += static_cast<double>(zeros) / (-z);
  return sum / static_cast<double>(dim);
}

void write_spectrum_csv(std::ostream& os, std::size_t replicate_id, const Spectrum& spec, bool header) {
  if (header) os << "replicate_id,rank,eigenvalue\n";
  os.precision(17);
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    os << replicate_id << ',' << (i + 1) << ',' << spec.values[i] << '\n';
}

}  // namespace spectral_edge
