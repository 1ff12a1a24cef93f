#pragma once

// Self-consistent equations for the Stieltjes transforms of the limiting
// spectral distribution of Q = Y Y^T, edge location, regime classification
// and the scale constants of the largest-eigenvalue limit laws.

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spectral_edge/population.hpp"
#include "spectral_edge/weight_laws.hpp"

namespace spectral_edge {

using cplx = std::complex<double>;

enum class ModelClass { Elliptical, Separable };

// Sampled weights; the law (if known) supplies l, d and the tail constants.
struct ConditionalWeights {
  std::vector<double> xi2;
  std::optional<WeightLaw> law;
};

struct UnconditionalWeights {
  WeightLaw law;
};

struct SolverEnv {
  ModelClass kind = ModelClass::Separable;
  PopulationSpec pop;
  std::variant<ConditionalWeights, UnconditionalWeights> weights;
  double phi = 1.0;  // p / n
  std::size_t n = 0;

  static SolverEnv conditional(ModelClass kind, PopulationSpec pop, std::vector<double> xi2,
                               std::optional<WeightLaw> law = std::nullopt);
  // n defaults to round(p / phi).
  static SolverEnv unconditional(ModelClass kind, PopulationSpec pop, WeightLaw law, double phi,
                                 std::size_t n = 0);

  bool is_conditional() const { return std::holds_alternative<ConditionalWeights>(weights); }
  // The law attached to the environment, if any.
  const WeightLaw* law() const;
  // Unconditional environment built from this one's law.
  SolverEnv integrated() const;
};

struct StieltjesTriple {
  cplx m1;
  cplx m2;
  cplx m;  // Stieltjes transform of the limiting ESD of Q
  double residual = 0.0;
};

enum class Regime { Weibull, Gaussian, TWMixture };
std::string to_string(Regime r);

struct Varsigma {
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double vartheta = 0;
};

// Standardized value (lambda_1 - center) / scale; scale ~ n^{-exponent}.
struct Standardization {
  double center = 0;
  double scale = 1;
  double exponent = 0;

  double apply(double lambda1) const { return (lambda1 - center) / scale; }
};

struct EdgeReport {
  double L_plus = 0;
  double m1_at_edge = 0;
  Varsigma varsigma;
  Regime regime = Regime::TWMixture;
  double d = 0;
  std::optional<double> gamma;
  Standardization standardization;
  double residual_F = 0;     // |F(m1, L_plus)|
  double residual_edge = 0;  // residual of the second edge equation
};

struct RegimeReport {
  Regime regime;
  double d;
  double phi_inv;
  double varsigma3;  // infinite when d <= 1
  std::optional<double> vartheta;
  // TW mixture: true when vartheta exceeds n^{-1/3} (Gaussian part dominates).
  std::optional<bool> gaussian_dominates;
  std::string rationale;
};

struct SolveOptions {
  double tol = 1e-10;
  std::optional<cplx> warm_start;
};

// Solves F(m1, z) = 0 on the upper half plane.
StieltjesTriple solve_m1(cplx z, const SolverEnv& env, const SolveOptions& opts = {});

// |F(m1, z)| for a candidate m1.
double residual_F(cplx m1, cplx z, const SolverEnv& env);

// Limiting density at E from Im m(E + i eta) / pi with one Richardson step in
// eta. Default eta = max(1e-6, 1e-4 * max(1, |E|)).
double density(double E, const SolverEnv& env, std::optional<double> eta = std::nullopt);

// Scale constants at L_plus; m1_at_edge defaults to -1/l. Entries that
// diverge (s1, s3 for d <= 1) are +inf.
Varsigma varsigma_constants(const SolverEnv& env, double L_plus, std::optional<double> m1_at_edge = std::nullopt);

// Edge when the density vanishes like (L_+ - x)^d (d > 1, phi^{-1} > s3).
EdgeReport edge_weibull_regime(const SolverEnv& env);
// Square-root edge: joint solution of F = 0 and dF/dm = 0.
EdgeReport edge_coupled(const SolverEnv& env);
RegimeReport classify_regime(const SolverEnv& env);
// Dispatches on the regime.
EdgeReport edge_report(const SolverEnv& env);

// Square-root coefficient gamma: rho(L_+ - k) ~ pi^{-1} gamma^{3/2} sqrt(k).
struct GammaFit {
  double gamma;
  double r_squared;
};
GammaFit fit_gamma(const SolverEnv& env, double L_plus);

// Largest root of h(mu) = 1 (conditional environment, unbounded tail).
// d1 defaults to n^{1/alpha - 0.01} (polynomial tail) or 1 (exponential tail).
double mu1_divergent(const SolverEnv& env, std::optional<double> d1 = std::nullopt);
double h_mu1(const SolverEnv& env, double mu, double d1);

enum class LimitFamily { Frechet, Gumbel, Weibull, Gaussian, TracyWidomMixture };
std::string to_string(LimitFamily f);

struct Lambda1Prediction {
  double point = 0;
  Standardization standardization;
  LimitFamily family = LimitFamily::Gaussian;
  double shape = 0;  // alpha (Frechet) or d + 1 (Weibull)
  std::optional<double> gamma;
  std::optional<EdgeReport> edge;

  double limit_cdf(double x) const;  // NaN for the TW mixture
};

// varphi: sigma_bar (elliptical) or phi * sigma_bar (separable).
double varphi(const SolverEnv& env);

Lambda1Prediction predict_lambda1(const SolverEnv& env, std::size_t n);

}  // namespace spectral_edge
