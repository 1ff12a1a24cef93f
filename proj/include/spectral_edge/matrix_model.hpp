#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "spectral_edge/population.hpp"
#include "spectral_edge/weight_laws.hpp"

namespace spectral_edge {

// Columns of X uniform on the unit sphere.
struct Elliptical {
  friend bool operator==(const Elliptical&, const Elliptical&) = default;
};

enum class EntryDist { Gaussian, Rademacher, StudentT };

// X has i.i.d. centered entries of variance 1/n.
struct SeparableIid {
  EntryDist entry = EntryDist::Gaussian;
  double nu = 0.0;  // StudentT degrees of freedom (>= 9)

  // E (sqrt(n) x_11)^4
  double m4() const;
  // The bootstrap theory needs m4 > 1; Rademacher entries have m4 = 1.
  bool violates_m4() const { return entry == EntryDist::Rademacher; }

  friend bool operator==(const SeparableIid&, const SeparableIid&) = default;
};

using ModelKind = std::variant<Elliptical, SeparableIid>;

inline bool is_elliptical(const ModelKind& k) { return std::holds_alternative<Elliptical>(k); }

struct DataSample {
  Eigen::MatrixXd y;  // p x n
  std::vector<double> weights;
  ModelKind kind;
  PopulationSpec pop;
  std::optional<WeightLaw> law;

  std::size_t p() const { return static_cast<std::size_t>(y.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(y.cols()); }
};

struct Spectrum {
  std::vector<double> values;  // descending, length min(p, n) for a full spectrum
  std::size_t p = 0;
  std::size_t n = 0;
};

// Y = Sigma^{1/2} X D with D = diag(xi_i), xi_i^2 drawn from `law`.
DataSample sample_data(const ModelKind& kind, const PopulationSpec& pop, const WeightLaw& law, std::size_t n,
                       std::uint64_t seed);
// Same construction with user-supplied weights (length n).
DataSample sample_data_with_weights(const ModelKind& kind, const PopulationSpec& pop, std::vector<double> weights,
                                    std::uint64_t seed);

// Full spectrum of Y Y^T through the smaller Gram matrix. Values below
// 1e-12 * lambda_1 are set to zero.
Spectrum eigenvalues(const Eigen::MatrixXd& y);
inline Spectrum eigenvalues(const DataSample& data) { return eigenvalues(data.y); }

// Largest k eigenvalues of Y Y^T (descending); Lanczos for large problems.
std::vector<double> top_eigenvalues(const Eigen::MatrixXd& y, std::size_t k);
inline std::vector<double> top_eigenvalues(const DataSample& data, std::size_t k) {
  return top_eigenvalues(data.y, k);
}

// Largest k eigenvalues of the symmetric PSD matrix g.
std::vector<double> top_eigenvalues_symmetric(const Eigen::MatrixXd& g, std::size_t k);

enum class GramSide { Q, QCal };

// (1/p) sum 1/(lambda_i - z) over the p eigenvalues of Q (side Q), or the
// analogue over the n eigenvalues of Y^T Y (side QCal). Missing zero
// eigenvalues are included.
std::complex<double> empirical_stieltjes(const Spectrum& spec, std::complex<double> z, GramSide side = GramSide::Q);

// Rows "replicate_id,rank,eigenvalue" (rank is 1-based).
void write_spectrum_csv(std::ostream& os, std::size_t replicate_id, const Spectrum& spec, bool header = false);

}  // namespace spectral_edge
