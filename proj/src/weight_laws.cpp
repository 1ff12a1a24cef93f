#include "spectral_edge/weight_laws.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/pareto.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "spectral_edge/errors.hpp"

namespace spectral_edge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-10;
constexpr unsigned kQuadDepth = 15;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

void validate(const LawParams& params, bool allow_violation) {
  std::visit(
      Overloaded{
          [&](const laws::Pareto& p) {
            require(p.x_min > 0, "pareto: x_min must be positive");
            require(p.alpha > 0, "pareto: alpha must be positive");
            require(allow_violation || p.alpha >= 2,
                    "pareto: tail index alpha < 2 is outside the admissible polynomial class");
          },
          [&](const laws::Gamma& p) {
            require(p.shape > 0 && p.rate > 0, "gamma: shape and rate must be positive");
          },
          [&](const laws::Exponential& p) { require(p.rate > 0, "exponential: rate must be positive"); },
          [&](const laws::SquaredStudentT& p) {
            require(p.nu > 0, "squared_student_t: nu must be positive");
            require(allow_violation || p.nu >= 4,
                    "squared_student_t: nu < 4 gives tail index below 2; mark the law as an "
                    "assumption-violating fixture to use it");
          },
          [&](const laws::ChiSquared& p) { require(p.k > 0, "chi_squared: k must be positive"); },
          [&](const laws::ScaledBeta& p) {
            require(p.l > 0 && p.a > 0 && p.b > 0, "scaled_beta: l, a and b must be positive");
          },
          [&](const laws::Uniform& p) { require(p.l > 0, "uniform: l must be positive"); },
          [&](const laws::PointMass& p) { require(p.c > 0, "point_mass: c must be positive"); },
      },
      params);
}

// One G7/K15 panel; err = |K15 - G7|.
template <class R, class F>
R gk15_panel(const F& f, double a, double b, double& err) {
  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  const auto& x = gauss_kronrod<double, 15>::abscissa();
  const auto& wk = gauss_kronrod<double, 15>::weights();
  const auto& wg = gauss<double, 7>::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const R fc = f(c);
  R k = fc * wk[0];
  R g = fc * wg[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const R pair = f(c + h * x[i]) + f(c - h * x[i]);
    k += pair * wk[i];
    if (i % 2 == 0) g += pair * wg[i / 2];
  }
  err = std::abs(k - g) * h;
  return k * h;
}

template <class R, class F>
R adaptive_gk(const F& f, double a, double b, double tol, unsigned depth) {
  double err = 0;
  const R val = gk15_panel<R>(f, a, b, err);
  if (err <= std::max(tol, 1e-13 * std::abs(val)) || depth == 0 || !std::isfinite(err)) return val;
  const double mid = 0.5 * (a + b);
  return adaptive_gk<R>(f, a, mid, 0.5 * tol, depth - 1) + adaptive_gk<R>(f, mid, b, 0.5 * tol, depth - 1);
}

// Integral over (0,1) with breakpoints 1 - 2^{-k}: integrands of bounded
// laws are nearly singular at the upper edge when 1 + s m is close to zero.
template <class R, class F>
R integrate_unit_edge(const F& f) {
  constexpr int kBreaks = 48;
  R total{};
  double lo = 0.0;
  for (int k = 1; k <= kBreaks; ++k) {
    const double hi = 1.0 - std::ldexp(1.0, -k);
    total += adaptive_gk<R>(f, lo, hi, kQuadTol / (kBreaks + 1), kQuadDepth);
    lo = hi;
  }
  total += adaptive_gk<R>(f, lo, 1.0, kQuadTol / (kBreaks + 1), kQuadDepth);
  return total;
}

// Integrates h(s) f(s) over the support of the law. Unbounded laws on (0, inf)
// are mapped through s = t^2, which removes the s^{-1/2} singularity of
// chi-squared / t^2 densities at the origin.
template <class R, class H>
R integrate_law(const WeightLaw& law, const H& h) {
  using boost::math::quadrature::gauss_kronrod;
  return std::visit(
      Overloaded{
          [&](const laws::PointMass& p) -> R { return h(p.c); },
          [&](const laws::Pareto& p) -> R {
            auto f = [&](double s) -> R { return h(s) * law.pdf(s); };
            return gauss_kronrod<double, 61>::integrate(f, p.x_min, kInf, kQuadDepth, kQuadTol);
          },
          [&](const laws::ScaledBeta& p) -> R {
            const double norm = 1.0 / boost::math::beta(p.a, p.b);
            return integrate_unit_edge<R>([&](double u) -> R {
              return h(p.l * u) * (norm * std::pow(u, p.a - 1) * std::pow(1 - u, p.b - 1));
            });
          },
          [&](const laws::Uniform& p) -> R {
            return integrate_unit_edge<R>([&](double u) -> R { return h(p.l * u); });
          },
          [&](const auto&) -> R {
            auto f = [&](double t) -> R {
              const double s = t * t;
              const double dens = law.pdf(s);
              if (dens == 0.0) return R{};
              return h(s) * dens * 2.0 * t;
            };
            return gauss_kronrod<double, 61>::integrate(f, 0.0, kInf, kQuadDepth, kQuadTol);
          },
      },
      law.params());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

double frechet_cdf(double x, double alpha) { return x <= 0 ? 0.0 : std::exp(-std::pow(x, -alpha)); }

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double weibull_max_cdf(double x, double alpha) {
  return x >= 0 ? 1.0 : std::exp(-std::pow(-x, alpha));
}

double EvtLimit::limit_cdf(double x) const {
  switch (family) {
    case EvtFamily::Frechet:
      return frechet_cdf(x, shape);
    case EvtFamily::Gumbel:
      return gumbel_cdf(x);
    case EvtFamily::Weibull:
      return weibull_max_cdf(x, shape);
  }
  return 0.0;
}

WeightLaw::WeightLaw(LawParams params, bool allow_assumption_violation)
    : params_(params), violating_(false) {
  validate(params_, allow_assumption_violation);
  if (const auto* p = std::get_if<laws::Pareto>(&params_)) violating_ = p->alpha < 2;
  if (const auto* p = std::get_if<laws::SquaredStudentT>(&params_)) violating_ = p->nu < 4;
}

WeightLaw WeightLaw::pareto(double x_min, double alpha, bool allow) {
  return WeightLaw(laws::Pareto{x_min, alpha}, allow);
}
WeightLaw WeightLaw::gamma(double shape, double rate) { return WeightLaw(laws::Gamma{shape, rate}); }
WeightLaw WeightLaw::exponential(double rate) { return WeightLaw(laws::Exponential{rate}); }
WeightLaw WeightLaw::squared_student_t(double nu, bool allow) {
  return WeightLaw(laws::SquaredStudentT{nu}, allow);
}
WeightLaw WeightLaw::chi_squared(double k) { return WeightLaw(laws::ChiSquared{k}); }
WeightLaw WeightLaw::scaled_beta(double l, double a, double b) {
  return WeightLaw(laws::ScaledBeta{l, a, b});
}
WeightLaw WeightLaw::uniform(double l) { return WeightLaw(laws::Uniform{l}); }
WeightLaw WeightLaw::point_mass(double c) { return WeightLaw(laws::PointMass{c}); }

bool WeightLaw::is_degenerate() const noexcept { return std::holds_alternative<laws::PointMass>(params_); }

bool WeightLaw::has_bounded_support() const noexcept {
  return std::holds_alternative<laws::ScaledBeta>(params_) || std::holds_alternative<laws::Uniform>(params_);
}

std::string WeightLaw::name() const {
  return std::visit(
      Overloaded{
          [](const laws::Pareto& p) { return "pareto(" + fmt(p.x_min) + "," + fmt(p.alpha) + ")"; },
          [](const laws::Gamma& p) { return "gamma(" + fmt(p.shape) + "," + fmt(p.rate) + ")"; },
          [](const laws::Exponential& p) { return "exponential(" + fmt(p.rate) + ")"; },
          [](const laws::SquaredStudentT& p) { return "t2(" + fmt(p.nu) + ")"; },
          [](const laws::ChiSquared& p) { return "chi2(" + fmt(p.k) + ")"; },
          [](const laws::ScaledBeta& p) {
            return "scaled_beta(" + fmt(p.l) + "," + fmt(p.a) + "," + fmt(p.b) + ")";
          },
          [](const laws::Uniform& p) { return "uniform(" + fmt(p.l) + ")"; },
          [](const laws::PointMass& p) { return "point_mass(" + fmt(p.c) + ")"; },
      },
      params_);
}

TailClass WeightLaw::tail_class() const {
  return std::visit(
      Overloaded{
          [](const laws::Pareto& p) -> TailClass { return PolyTail{p.alpha}; },
          [](const laws::SquaredStudentT& p) -> TailClass { return PolyTail{p.nu / 2}; },
          [](const laws::Gamma&) -> TailClass { return ExpTail{1.0}; },
          [](const laws::Exponential&) -> TailClass { return ExpTail{1.0}; },
          [](const laws::ChiSquared&) -> TailClass { return ExpTail{1.0}; },
          [](const laws::ScaledBeta& p) -> TailClass {
            // 1 - F(x) ~ (1 - x/l)^b / (b B(a,b)) as x -> l.
            const double edge = 1.0 / (p.b * boost::math::beta(p.a, p.b) * std::pow(p.l, p.b));
            return BoundedTail{p.l, p.b - 1, edge};
          },
          [](const laws::Uniform& p) -> TailClass { return BoundedTail{p.l, 0.0, 1.0 / p.l}; },
          [](const laws::PointMass& p) -> TailClass { return DegenerateTail{p.c}; },
      },
      params_);
}

double WeightLaw::cdf(double x) const {
  namespace bm = boost::math;
  return std::visit(
      Overloaded{
          [&](const laws::Pareto& p) {
            return x <= p.x_min ? 0.0 : bm::cdf(bm::pareto_distribution<double>(p.x_min, p.alpha), x);
          },
          [&](const laws::Gamma& p) {
            return x <= 0 ? 0.0 : bm::cdf(bm::gamma_distribution<double>(p.shape, 1.0 / p.rate), x);
          },
          [&](const laws::Exponential& p) {
            return x <= 0 ? 0.0 : bm::cdf(bm::exponential_distribution<double>(p.rate), x);
          },
          [&](const laws::SquaredStudentT& p) {
            if (x <= 0) return 0.0;
            return 1.0 - 2.0 * bm::cdf(bm::complement(bm::students_t_distribution<double>(p.nu), std::sqrt(x)));
          },
          [&](const laws::ChiSquared& p) {
            return x <= 0 ? 0.0 : bm::cdf(bm::chi_squared_distribution<double>(p.k), x);
          },
          [&](const laws::ScaledBeta& p) {
            if (x <= 0) return 0.0;
            if (x >= p.l) return 1.0;
            return bm::cdf(bm::beta_distribution<double>(p.a, p.b), x / p.l);
          },
          [&](const laws::Uniform& p) { return x <= 0 ? 0.0 : (x >= p.l ? 1.0 : x / p.l); },
          [&](const laws::PointMass& p) { return x < p.c ? 0.0 : 1.0; },
      },
      params_);
}

double WeightLaw::survival(double x) const {
  namespace bm = boost::math;
  return std::visit(
      Overloaded{
          [&](const laws::Pareto& p) { return x <= p.x_min ? 1.0 : std::pow(p.x_min / x, p.alpha); },
          [&](const laws::Gamma& p) {
            return x <= 0 ? 1.0
                          : bm::cdf(bm::complement(bm::gamma_distribution<double>(p.shape, 1.0 / p.rate), x));
          },
          [&](const laws::Exponential& p) { return x <= 0 ? 1.0 : std::exp(-p.rate * x); },
          [&](const laws::SquaredStudentT& p) {
            if (x <= 0) return 1.0;
            return 2.0 * bm::cdf(bm::complement(bm::students_t_distribution<double>(p.nu), std::sqrt(x)));
          },
          [&](const laws::ChiSquared& p) {
            return x <= 0 ? 1.0 : bm::cdf(bm::complement(bm::chi_squared_distribution<double>(p.k), x));
          },
          [&](const laws::ScaledBeta& p) {
            if (x <= 0) return 1.0;
            if (x >= p.l) return 0.0;
            return bm::cdf(bm::complement(bm::beta_distribution<double>(p.a, p.b), x / p.l));
          },
          [&](const laws::Uniform& p) { return x <= 0 ? 1.0 : (x >= p.l ? 0.0 : 1.0 - x / p.l); },
          [&](const laws::PointMass& p) { return x < p.c ? 1.0 : 0.0; },
      },
      params_);
}

double WeightLaw::pdf(double x) const {
  namespace bm = boost::math;
  return std::visit(
      Overloaded{
          [&](const laws::Pareto& p) {
            return x < p.x_min ? 0.0 : p.alpha * std::pow(p.x_min, p.alpha) / std::pow(x, p.alpha + 1);
          },
          [&](const laws::Gamma& p) {
            return x <= 0 ? 0.0 : bm::pdf(bm::gamma_distribution<double>(p.shape, 1.0 / p.rate), x);
          },
          [&](const laws::Exponential& p) { return x < 0 ? 0.0 : p.rate * std::exp(-p.rate * x); },
          [&](const laws::SquaredStudentT& p) {
            if (x <= 0) return 0.0;
            const double t = std::sqrt(x);
            return bm::pdf(bm::students_t_distribution<double>(p.nu), t) / t;
          },
          [&](const laws::ChiSquared& p) {
            return x <= 0 ? 0.0 : bm::pdf(bm::chi_squared_distribution<double>(p.k), x);
          },
          [&](const laws::ScaledBeta& p) {
            if (x <= 0 || x >= p.l) return 0.0;
            return bm::pdf(bm::beta_distribution<double>(p.a, p.b), x / p.l) / p.l;
          },
          [&](const laws::Uniform& p) { return (x < 0 || x > p.l) ? 0.0 : 1.0 / p.l; },
          [&](const laws::PointMass&) -> double {
            throw ParameterError("point_mass: no density");
          },
      },
      params_);
}

double WeightLaw::support_upper() const {
  if (const auto* p = std::get_if<laws::ScaledBeta>(&params_)) return p->l;
  if (const auto* p = std::get_if<laws::Uniform>(&params_)) return p->l;
  if (const auto* p = std::get_if<laws::PointMass>(&params_)) return p->c;
  return kInf;
}

double WeightLaw::tail_rate(double x) const { return -std::log(survival(x)); }

double WeightLaw::tail_rate_derivative(double x) const {
  if (const auto* p = std::get_if<laws::Exponential>(&params_)) return p->rate;
  constexpr double h = 1e-6;
  return (tail_rate(x + h) - tail_rate(x - h)) / (2 * h);
}

double WeightLaw::expect(const std::function<double(double)>& h) const {
  return integrate_law<double>(*this, h);
}

std::complex<double> WeightLaw::expect_complex(const std::function<std::complex<double>(double)>& h) const {
  return integrate_law<std::complex<double>>(*this, h);
}

void WeightLaw::sample_into(std::span<double> out, Rng& rng) const {
  std::visit(
      Overloaded{
          [&](const laws::Pareto& p) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (auto& v : out) v = p.x_min * std::pow(1.0 - u(rng), -1.0 / p.alpha);
          },
          [&](const laws::Gamma& p) {
            std::gamma_distribution<double> g(p.shape, 1.0 / p.rate);
            for (auto& v : out) v = g(rng);
          },
          [&](const laws::Exponential& p) {
            std::exponential_distribution<double> e(p.rate);
            for (auto& v : out) v = e(rng);
          },
          [&](const laws::SquaredStudentT& p) {
            std::student_t_distribution<double> t(p.nu);
            for (auto& v : out) {
              const double x = t(rng);
              v = x * x;
            }
          },
          [&](const laws::ChiSquared& p) {
            std::chi_squared_distribution<double> c(p.k);
            for (auto& v : out) v = c(rng);
          },
          [&](const laws::ScaledBeta& p) {
            std::gamma_distribution<double> ga(p.a, 1.0), gb(p.b, 1.0);
            for (auto& v : out) {
              const double x = ga(rng);
              const double y = gb(rng);
              v = p.l * x / (x + y);
            }
          },
          [&](const laws::Uniform& p) {
            std::uniform_real_distribution<double> u(0.0, p.l);
            for (auto& v : out) v = u(rng);
          },
          [&](const laws::PointMass& p) {
            for (auto& v : out) v = p.c;
          },
      },
      params_);
}

std::vector<double> sample_weights(const WeightLaw& law, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample_weights: n must be at least 1");
  std::vector<double> out(n);
  auto rng = make_rng(seed);
  law.sample_into(out, rng);
  return out;
}

double first_moment(const WeightLaw& law) {
  return std::visit(
      Overloaded{
          [](const laws::Pareto& p) {
            if (p.alpha <= 1) throw MomentUndefinedError("pareto: E xi^2 infinite for alpha <= 1");
            return p.alpha * p.x_min / (p.alpha - 1);
          },
          [](const laws::Gamma& p) { return p.shape / p.rate; },
          [](const laws::Exponential& p) { return 1.0 / p.rate; },
          [](const laws::SquaredStudentT& p) {
            if (p.nu <= 2) throw MomentUndefinedError("t2: E xi^2 infinite for nu <= 2");
            return p.nu / (p.nu - 2);
          },
          [](const laws::ChiSquared& p) { return p.k; },
          [](const laws::ScaledBeta& p) { return p.l * p.a / (p.a + p.b); },
          [](const laws::Uniform& p) { return p.l / 2; },
          [](const laws::PointMass& p) { return p.c; },
      },
      law.params());
}

WeightMoments moments(const WeightLaw& law) {
  const double m2 = first_moment(law);
  const double m4 = std::visit(
      Overloaded{
          [](const laws::Pareto& p) {
            if (p.alpha <= 2) throw MomentUndefinedError("pareto: E xi^4 infinite for alpha <= 2");
            return p.alpha * p.x_min * p.x_min / (p.alpha - 2);
          },
          [](const laws::Gamma& p) { return p.shape * (p.shape + 1) / (p.rate * p.rate); },
          [](const laws::Exponential& p) { return 2.0 / (p.rate * p.rate); },
          [](const laws::SquaredStudentT& p) {
            if (p.nu <= 4) throw MomentUndefinedError("t2: E xi^4 infinite for nu <= 4");
            return 3 * p.nu * p.nu / ((p.nu - 2) * (p.nu - 4));
          },
          [](const laws::ChiSquared& p) { return p.k * (p.k + 2); },
          [](const laws::ScaledBeta& p) {
            return p.l * p.l * p.a * (p.a + 1) / ((p.a + p.b) * (p.a + p.b + 1));
          },
          [](const laws::Uniform& p) { return p.l * p.l / 3; },
          [](const laws::PointMass& p) { return p.c * p.c; },
      },
      law.params());
  return {m2, m4};
}

double tail_threshold_b_n(const WeightLaw& law, std::size_t n) {
  namespace bm = boost::math;
  if (n == 0) throw ParameterError("tail_threshold_b_n: n must be at least 1");
  const double q = 1.0 / static_cast<double>(n);
  return std::visit(
      Overloaded{
          [&](const laws::Pareto& p) { return p.x_min * std::pow(static_cast<double>(n), 1.0 / p.alpha); },
          [&](const laws::Exponential& p) { return std::log(static_cast<double>(n)) / p.rate; },
          [&](const laws::Gamma& p) {
            if (n == 1) return 0.0;
            return bm::quantile(bm::complement(bm::gamma_distribution<double>(p.shape, 1.0 / p.rate), q));
          },
          [&](const laws::ChiSquared& p) {
            if (n == 1) return 0.0;
            return bm::quantile(bm::complement(bm::chi_squared_distribution<double>(p.k), q));
          },
          [&](const laws::SquaredStudentT& p) {
            if (n == 1) return 0.0;
            const double t = bm::quantile(bm::complement(bm::students_t_distribution<double>(p.nu), q / 2));
            return t * t;
          },
          [&](const auto&) -> double {
            throw UnsupportedTailError("tail_threshold_b_n: " + law.name() + " has bounded support");
          },
      },
      law.params());
}

EvtLimit evt_limit(const WeightLaw& law, std::size_t n) {
  const auto tail = law.tail_class();
  return std::visit(
      Overloaded{
          [&](const PolyTail& t) {
            return EvtLimit{EvtFamily::Frechet, t.alpha, 0.0, tail_threshold_b_n(law, n)};
          },
          [&](const ExpTail&) {
            const double bn = tail_threshold_b_n(law, n);
            return EvtLimit{EvtFamily::Gumbel, 0.0, bn, 1.0 / law.tail_rate_derivative(bn)};
          },
          [&](const BoundedTail& t) {
            const double scale = std::pow(t.edge_constant * static_cast<double>(n), -1.0 / (t.d + 1));
            return EvtLimit{EvtFamily::Weibull, t.d + 1, t.l, scale};
          },
          [&](const DegenerateTail&) -> EvtLimit {
            throw ParameterError("evt_limit: degenerate law has no extreme-value limit");
          },
      },
      tail);
}

}  // namespace spectral_edge
