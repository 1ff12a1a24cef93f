#pragma once

// Distributions of the squared radius xi^2 that weights the columns of the
// data matrix, with their tail classification and extreme-value scalings.

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spectral_edge/rng.hpp"

namespace spectral_edge {

namespace laws {
struct Pareto {
  double x_min;
  double alpha;

  friend bool operator==(const Pareto&, const Pareto&) = default;
};
struct Gamma {
  double shape;
  double rate;

  friend bool operator==(const Gamma&, const Gamma&) = default;
};
struct Exponential {
  double rate;

  friend bool operator==(const Exponential&, const Exponential&) = default;
};
// xi^2 = t_nu^2.
struct SquaredStudentT {
  double nu;

  friend bool operator==(const SquaredStudentT&, const SquaredStudentT&) = default;
};
struct ChiSquared {
  double k;

  friend bool operator==(const ChiSquared&, const ChiSquared&) = default;
};
// xi^2 = l * Beta(a, b).
struct ScaledBeta {
  double l;
  double a;
  double b;

  friend bool operator==(const ScaledBeta&, const ScaledBeta&) = default;
};
// xi^2 ~ Uniform(0, l).
struct Uniform {
  double l;

  friend bool operator==(const Uniform&, const Uniform&) = default;
};
// Degenerate law; only meant as a test fixture (Marchenko-Pastur limit).
struct PointMass {
  double c;

  friend bool operator==(const PointMass&, const PointMass&) = default;
};
}  // namespace laws

using LawParams = std::variant<laws::Pareto, laws::Gamma, laws::Exponential, laws::SquaredStudentT,
                               laws::ChiSquared, laws::ScaledBeta, laws::Uniform, laws::PointMass>;

// P(xi^2 > x) ~ L(x) x^{-alpha}.
struct PolyTail {
  double alpha;
};
// P(xi^2 > x) = exp(-g(x)) with E exp(t xi^{2 beta}) finite.
struct ExpTail {
  double beta;
};
// Support (0, l]; (1 - F(x)) / (l - x)^{d+1} -> edge_constant as x -> l.
struct BoundedTail {
  double l;
  double d;
  double edge_constant;
};
struct DegenerateTail {
  double value;
};
using TailClass = std::variant<PolyTail, ExpTail, BoundedTail, DegenerateTail>;

struct WeightMoments {
  double m2;  // E xi^2
  double m4;  // E xi^4
};

enum class EvtFamily { Frechet, Gumbel, Weibull };

// Affine map (M - center) / scale that standardizes the maximum of n draws,
// together with the limiting CDF of the standardized maximum.
struct EvtLimit {
  EvtFamily family;
  double shape;  // alpha for Frechet, d + 1 for Weibull, unused for Gumbel
  double center;
  double scale;

  double standardize(double maximum) const { return (maximum - center) / scale; }
  double limit_cdf(double x) const;
};

// Limit CDFs of the three extreme-value families.
double frechet_cdf(double x, double alpha);
double gumbel_cdf(double x);
double weibull_max_cdf(double x, double alpha);

class WeightLaw {
 public:
  // `allow_assumption_violation` admits polynomial tails with index below 2
  // (e.g. t_3^2 or t_2^2 used in simulation settings).
  explicit WeightLaw(LawParams params, bool allow_assumption_violation = false);

  static WeightLaw pareto(double x_min, double alpha, bool allow_assumption_violation = false);
  static WeightLaw gamma(double shape, double rate);
  static WeightLaw exponential(double rate);
  static WeightLaw squared_student_t(double nu, bool allow_assumption_violation = false);
  static WeightLaw chi_squared(double k);
  static WeightLaw scaled_beta(double l, double a, double b);
  static WeightLaw uniform(double l);
  static WeightLaw point_mass(double c);

  const LawParams& params() const noexcept { return params_; }
  bool assumption_violating() const noexcept { return violating_; }
  bool is_degenerate() const noexcept;
  bool has_bounded_support() const noexcept;
  std::string name() const;

  TailClass tail_class() const;

  double cdf(double x) const;
  double survival(double x) const;
  double pdf(double x) const;
  double support_upper() const;  // +inf for unbounded laws

  // g(x) = -log P(xi^2 > x) and its derivative (analytic for Exponential,
  // central difference with h = 1e-6 otherwise).
  double tail_rate(double x) const;
  double tail_rate_derivative(double x) const;

  // E h(xi^2) by adaptive Gauss-Kronrod quadrature (abs. tolerance 1e-10).
  double expect(const std::function<double(double)>& h) const;
  std::complex<double> expect_complex(const std::function<std::complex<double>(double)>& h) const;

  void sample_into(std::span<double> out, Rng& rng) const;

  friend bool operator==(const WeightLaw&, const WeightLaw&) = default;

 private:
  LawParams params_;
  bool violating_;
};

std::vector<double> sample_weights(const WeightLaw& law, std::size_t n, std::uint64_t seed);

// Closed-form (E xi^2, E xi^4). Throws MomentUndefinedError when either is
// infinite for the family.
WeightMoments moments(const WeightLaw& law);
// E xi^2 alone; finite for more laws than the pair above.
double first_moment(const WeightLaw& law);

// b_n = inf{x : 1 - F(x) <= 1/n}. Unbounded laws only.
double tail_threshold_b_n(const WeightLaw& law, std::size_t n);

EvtLimit evt_limit(const WeightLaw& law, std::size_t n);

}  // namespace spectral_edge
