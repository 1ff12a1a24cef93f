#include "spectral_edge/stieltjes_solver.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spectral_edge/errors.hpp"
#include "spectral_edge/stats.hpp"

namespace spectral_edge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCriticalTol = 1e-6;

// Distinct population eigenvalues with their relative frequencies.
struct Atoms {
  std::vector<double> sigma;
  std::vector<double> weight;
  double sigma_max = 0;
  double sigma_mean = 0;
};

Atoms compress(const PopulationSpec& pop) {
  if (pop.sigmas.empty()) throw ParameterError("solver: empty population");
  std::vector<double> s = pop.sigmas;
  std::sort(s.begin(), s.end(), std::greater<>());
  Atoms out;
  const double inv_p = 1.0 / static_cast<double>(s.size());
  for (double v : s) {
    if (!(v > 0)) throw ParameterError("solver: population eigenvalues must be positive");
    if (!out.sigma.empty() && out.sigma.back() == v) {
      out.weight.back() += inv_p;
    } else {
      out.sigma.push_back(v);
      out.weight.push_back(inv_p);
    }
  }
  out.sigma_max = out.sigma.front();
  out.sigma_mean = std::accumulate(s.begin(), s.end(), 0.0) * inv_p;
  return out;
}

// F(m, z) = a * sum_k pi_k sigma_k / (-z + sigma_k b W(m)) - m, where W is the
// weight average E s / (1 + s m). Separable: (a, b) = (phi, 1); elliptical:
// (a, b) = (1, 1/phi).
struct Coefs {
  double a;
  double b;
};

Coefs coefs(const SolverEnv& env) {
  return env.kind == ModelClass::Separable ? Coefs{env.phi, 1.0} : Coefs{1.0, 1.0 / env.phi};
}

struct WeightSums {
  cplx W;   // E s / (1 + s m)
  cplx S2;  // E s^2 / (1 + s m)^2
};

WeightSums weight_sums(const SolverEnv& env, cplx m) {
  if (const auto* c = std::get_if<ConditionalWeights>(&env.weights)) {
    cplx w = 0.0, s2 = 0.0;
    for (double x : c->xi2) {
      const cplx t = x / (1.0 + x * m);
      w += t;
      s2 += t * t;
    }
    const double inv_n = 1.0 / static_cast<double>(c->xi2.size());
    return {w * inv_n, s2 * inv_n};
  }
  const auto& law = std::get<UnconditionalWeights>(env.weights).law;
  const cplx w = law.expect_complex([m](double s) -> cplx { return s / (1.0 + s * m); });
  const cplx s2 = law.expect_complex([m](double s) -> cplx {
    const cplx t = s / (1.0 + s * m);
    return t * t;
  });
  return {w, s2};
}

struct PhiEval {
  cplx phi;
  cplx dphi;
  WeightSums ws;
};

PhiEval phi_eval(const Atoms& atoms, const Coefs& c, const WeightSums& ws, cplx z) {
  const cplx w = c.b * ws.W;
  cplx phi = 0.0, dphi = 0.0;
  for (std::size_t k = 0; k < atoms.sigma.size(); ++k) {
    const double s = atoms.sigma[k];
    const cplx den = -z + s * w;
    phi += atoms.weight[k] * s / den;
    dphi += atoms.weight[k] * s * s / (den * den);
  }
  return {c.a * phi, c.a * c.b * ws.S2 * dphi, ws};
}

class Solver {
 public:
  explicit Solver(const SolverEnv& env) : env_(env), atoms_(compress(env.pop)), c_(spectral_edge::coefs(env)) {}

  PhiEval eval(cplx m, cplx z) const { return phi_eval(atoms_, c_, weight_sums(env_, m), z); }

  bool newton(cplx z, cplx& m, double tol, double& resid) const {
    auto e = eval(m, z);
    cplx g = e.phi - m;
    resid = std::abs(g);
    for (int it = 0; it < 60; ++it) {
      if (resid <= tol) return true;
      const cplx step = g / (e.dphi - 1.0);
      double lam = 1.0;
      bool accepted = false;
      for (int h = 0; h < 40; ++h, lam *= 0.5) {
        const cplx trial = m - lam * step;
        if (!(trial.imag() > 0) || !std::isfinite(trial.real())) continue;
        auto et = eval(trial, z);
        const cplx gt = et.phi - trial;
        const double rt = std::abs(gt);
        if (rt < resid) {
          m = trial;
          e = et;
          g = gt;
          resid = rt;
          accepted = true;
          break;
        }
      }
      if (!accepted) return resid <= tol;
    }
    return resid <= tol;
  }

  bool damped(cplx z, cplx& m, double tol, double& resid) const {
    for (double omega : {0.5, 0.1}) {
      cplx cur = m;
      for (int it = 0; it < 20000; ++it) {
        const auto e = eval(cur, z);
        const cplx g = e.phi - cur;
        resid = std::abs(g);
        if (resid < 1e-4) {
          cplx polished = cur;
          if (newton(z, polished, tol, resid)) {
            m = polished;
            return true;
          }
        }
        cur += omega * g;
        if (!(cur.imag() > 0) || !std::isfinite(cur.real())) break;
      }
    }
    return false;
  }

  StieltjesTriple solve(cplx z, const SolveOptions& opts) const {
    if (!(z.imag() > 0)) throw ParameterError("solve_m1: Im z must be positive");
    double resid = kInf;
    if (opts.warm_start && opts.warm_start->imag() > 0) {
      cplx m = *opts.warm_start;
      if (newton(z, m, opts.tol, resid)) return finish(z, m, resid);
    }

    const double E = z.real();
    const double eta = z.imag();
    const double eta0 = std::max(eta, 4.0 * (1.0 + std::abs(E) + c_.a * atoms_.sigma_max));
    cplx zc(E, eta0);
    cplx m = -c_.a * atoms_.sigma_mean / zc;
    if (!damped(zc, m, opts.tol, resid) && !newton(zc, m, opts.tol, resid))
      throw SolverError("solve_m1: no convergence at the continuation start", resid);

    double cur = eta0;
    while (cur > eta) {
      double ratio = 0.5;
      bool ok = false;
      for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
        const double next = std::max(eta, cur * ratio);
        cplx trial = m;
        if (newton(cplx(E, next), trial, opts.tol, resid)) {
          m = trial;
          cur = next;
          ok = true;
        } else {
          ratio = std::sqrt(ratio);
        }
      }
      if (!ok) {
        const double next = std::max(eta, cur * 0.5);
        cplx trial = m;
        if (!damped(cplx(E, next), trial, opts.tol, resid))
          throw SolverError("solve_m1: continuation in Im z stalled", resid);
        m = trial;
        cur = next;
      }
    }
    return finish(z, m, resid);
  }

  StieltjesTriple finish(cplx z, cplx m1, double resid) const {
    const auto ws = weight_sums(env_, m1);
    const cplx m2 = -c_.b * ws.W / z;
    cplx m = 0.0;
    for (std::size_t k = 0; k < atoms_.sigma.size(); ++k)
      m += atoms_.weight[k] / (-z * (1.0 + atoms_.sigma[k] * m2));
    return {m1, m2, m, resid};
  }

  const Atoms& atoms() const { return atoms_; }
  const Coefs& coefs() const { return c_; }

 private:
  const SolverEnv& env_;
  Atoms atoms_;
  Coefs c_;
};

// Weight sums on the real axis.
std::pair<double, double> real_sums(const SolverEnv& env, double m) {
  const auto ws = weight_sums(env, cplx(m, 0.0));
  return {ws.W.real(), ws.S2.real()};
}

double max_weight(const SolverEnv& env) {
  if (const auto* c = std::get_if<ConditionalWeights>(&env.weights))
    return *std::max_element(c->xi2.begin(), c->xi2.end());
  const auto& law = std::get<UnconditionalWeights>(env.weights).law;
  const double up = law.support_upper();
  if (!std::isfinite(up))
    throw UnsupportedTailError("edge: " + law.name() + " has unbounded support; the edge diverges");
  return up;
}

// Real x > sigma_1 w with a * sum pi sigma / (sigma w - x) = m (m < 0).
double x_of_m(const Atoms& atoms, const Coefs& c, double w, double m) {
  if (atoms.sigma.size() == 1) return atoms.sigma[0] * w - c.a * atoms.sigma[0] / m;
  auto g = [&](double x) {
    double s = 0;
    for (std::size_t k = 0; k < atoms.sigma.size(); ++k)
      s += atoms.weight[k] * atoms.sigma[k] / (atoms.sigma[k] * w - x);
    return c.a * s - m;
  };
  const double top = atoms.sigma_max * w;
  const double lo = top + c.a * atoms.weight[0] * atoms.sigma[0] / (-m);
  const double hi = top + 2.0 * c.a * atoms.sigma_mean / (-m);
  if (g(lo) >= 0) return lo;
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

struct EdgePoint {
  double x;
  double crit;
  double w;
};

EdgePoint edge_point(const SolverEnv& env, const Atoms& atoms, const Coefs& c, double m) {
  const auto [W, S2] = real_sums(env, m);
  const double w = c.b * W;
  const double x = x_of_m(atoms, c, w, m);
  double s = 0;
  for (std::size_t k = 0; k < atoms.sigma.size(); ++k) {
    const double den = x - atoms.sigma[k] * w;
    s += atoms.weight[k] * atoms.sigma[k] * atoms.sigma[k] / (den * den);
  }
  return {x, c.a * c.b * S2 * s - 1.0, w};
}

const BoundedTail* bounded_tail(const SolverEnv& env, TailClass& storage) {
  const WeightLaw* law = env.law();
  if (!law) return nullptr;
  storage = law->tail_class();
  return std::get_if<BoundedTail>(&storage);
}

// Closed forms of E[l s/(l - s)] and E[l^2 s^2/(l - s)^2] under the law.
std::optional<std::pair<double, double>> closed_form_s2_s1(const WeightLaw& law) {
  if (const auto* p = std::get_if<laws::ScaledBeta>(&law.params())) {
    const double s2 = p->b > 1 ? p->l * p->a / (p->b - 1) : kInf;
    const double s1 = p->b > 2 ? p->l * p->l * p->a * (p->a + 1) / ((p->b - 1) * (p->b - 2)) : kInf;
    return std::make_pair(s2, s1);
  }
  if (std::holds_alternative<laws::Uniform>(law.params())) return std::make_pair(kInf, kInf);
  return std::nullopt;
}

// (E[l s/(l - s)], E[l^2 s^2/(l - s)^2]) under the environment's weights.
std::pair<double, double> raw_s2_s1(const SolverEnv& env, const BoundedTail& tail) {
  if (!env.is_conditional()) {
    if (auto closed = closed_form_s2_s1(*env.law())) return *closed;
    if (tail.d <= 1) return {tail.d <= 0 ? kInf : real_sums(env, -1.0 / tail.l).first, kInf};
  }
  return real_sums(env, -1.0 / tail.l);
}

struct WeibullEdge {
  double L;
  Varsigma v;
  double l;
  BoundedTail tail;
};

WeibullEdge solve_weibull_edge(const SolverEnv& env) {
  TailClass storage;
  const BoundedTail* tail = bounded_tail(env, storage);
  if (!tail) throw WrongRegimeError("edge_weibull_regime: requires a bounded-support weight law");
  if (!(tail->d > 1))
    throw WrongRegimeError("edge_weibull_regime: edge exponent d <= 1 gives a square-root edge; use edge_coupled");
  const Atoms atoms = compress(env.pop);
  const Coefs c = coefs(env);
  const double l = tail->l;
  const double vs2 = c.b * raw_s2_s1(env, *tail).first;
  double L;
  if (atoms.sigma.size() == 1) {
    L = atoms.sigma[0] * vs2 + c.a * atoms.sigma[0] * l;
  } else {
    auto f = [&](double x) {
      double s = 0;
      for (std::size_t k = 0; k < atoms.sigma.size(); ++k)
        s += atoms.weight[k] * atoms.sigma[k] * l / (x - atoms.sigma[k] * vs2);
      return c.a * s - 1.0;
    };
    const double top = atoms.sigma_max * vs2;
    const double lo = top + c.a * atoms.weight[0] * atoms.sigma[0] * l;
    const double hi = top + 2.0 * c.a * atoms.sigma_mean * l;
    if (f(lo) <= 0) {
      L = lo;
    } else {
      auto r = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(52));
      L = 0.5 * (r.first + r.second);
    }
  }
  return {L, varsigma_constants(env, L), l, *tail};
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Weibull:
      return "weibull";
    case Regime::Gaussian:
      return "gaussian";
    case Regime::TWMixture:
      return "tw_mixture";
  }
  return "?";
}

std::string to_string(LimitFamily f) {
  switch (f) {
    case LimitFamily::Frechet:
      return "frechet";
    case LimitFamily::Gumbel:
      return "gumbel";
    case LimitFamily::Weibull:
      return "weibull";
    case LimitFamily::Gaussian:
      return "gaussian";
    case LimitFamily::TracyWidomMixture:
      return "tw_mixture";
  }
  return "?";
}

SolverEnv SolverEnv::conditional(ModelClass kind, PopulationSpec pop, std::vector<double> xi2,
                                 std::optional<WeightLaw> law) {
  if (xi2.empty()) throw ParameterError("SolverEnv: empty weight vector");
  for (double x : xi2)
    if (!(x > 0)) throw ParameterError("SolverEnv: conditional weights must be positive");
  const std::size_t n = xi2.size();
  const double phi = static_cast<double>(pop.p()) / static_cast<double>(n);
  return SolverEnv{kind, std::move(pop), ConditionalWeights{std::move(xi2), std::move(law)}, phi, n};
}

SolverEnv SolverEnv::unconditional(ModelClass kind, PopulationSpec pop, WeightLaw law, double phi, std::size_t n) {
  if (!(phi > 0)) throw ParameterError("SolverEnv: phi must be positive");
  if (n == 0) n = static_cast<std::size_t>(std::llround(static_cast<double>(pop.p()) / phi));
  return SolverEnv{kind, std::move(pop), UnconditionalWeights{std::move(law)}, phi, std::max<std::size_t>(n, 1)};
}

const WeightLaw* SolverEnv::law() const {
  if (const auto* c = std::get_if<ConditionalWeights>(&weights)) return c->law ? &*c->law : nullptr;
  return &std::get<UnconditionalWeights>(weights).law;
}

SolverEnv SolverEnv::integrated() const {
  const WeightLaw* l = law();
  if (!l) throw ParameterError("SolverEnv: no weight law attached");
  return SolverEnv{kind, pop, UnconditionalWeights{*l}, phi, n};
}

StieltjesTriple solve_m1(cplx z, const SolverEnv& env, const SolveOptions& opts) {
  Solver solver(env);
  return solver.solve(z, opts);
}

double residual_F(cplx m1, cplx z, const SolverEnv& env) {
  Solver solver(env);
  return std::abs(solver.eval(m1, z).phi - m1);
}

double density(double E, const SolverEnv& env, std::optional<double> eta) {
  const double h = eta.value_or(std::max(1e-6, 1e-4 * std::max(1.0, std::abs(E))));
  if (!(h > 0)) throw ParameterError("density: eta must be positive");
  Solver solver(env);
  const auto coarse = solver.solve(cplx(E, 2 * h), {});
  SolveOptions warm;
  warm.warm_start = coarse.m1;
  const auto fine = solver.solve(cplx(E, h), warm);
  const double rho = (2.0 * fine.m.imag() - coarse.m.imag()) / M_PI;
  return std::max(rho, 0.0);
}

Varsigma varsigma_constants(const SolverEnv& env, double L_plus, std::optional<double> m1_at_edge) {
  TailClass storage;
  const BoundedTail* tail = bounded_tail(env, storage);
  if (!tail) throw UnsupportedTailError("varsigma_constants: requires a bounded-support weight law");
  const Atoms atoms = compress(env.pop);
  const Coefs c = coefs(env);
  const double l = tail->l;
  const double m_edge = -1.0 / l;

  const auto [s2_raw, s1_raw] = raw_s2_s1(env, *tail);
  const bool closed = !env.is_conditional() && closed_form_s2_s1(*env.law()).has_value();

  Varsigma v;
  v.s1 = c.b * s1_raw;
  v.s2 = c.b * s2_raw;
  if (std::isfinite(v.s2)) {
    double t3 = 0, t4 = 0;
    for (std::size_t k = 0; k < atoms.sigma.size(); ++k) {
      const double den = L_plus - atoms.sigma[k] * v.s2;
      t3 += atoms.weight[k] * atoms.sigma[k] * atoms.sigma[k] / (den * den);
      t4 += atoms.weight[k] * atoms.sigma[k] / (den * den);
    }
    v.s3 = std::isfinite(v.s1) ? c.b * v.s1 * t3 : kInf;
    v.s4 = c.a * t4;
  } else {
    v.s3 = kInf;
    v.s4 = kNaN;
  }

  const double m = m1_at_edge.value_or(m_edge);
  if (closed && m == m_edge) {
    v.vartheta = c.b * c.b * (s1_raw - s2_raw * s2_raw);
  } else {
    const auto [W, S2] = real_sums(env, m);
    v.vartheta = c.b * c.b * std::max(S2 - W * W, 0.0);
  }
  if (!std::isfinite(v.vartheta) || std::isnan(v.vartheta)) v.vartheta = kInf;
  return v;
}

EdgeReport edge_weibull_regime(const SolverEnv& env) {
  const auto we = solve_weibull_edge(env);
  const double gap = 1.0 / env.phi - we.v.s3;
  if (std::abs(gap) <= kCriticalTol)
    throw CriticalCaseError("edge_weibull_regime: phi^{-1} equals varsigma_3; no limit law available");
  if (gap < 0)
    throw WrongRegimeError("edge_weibull_regime: phi^{-1} < varsigma_3, the edge is square-root; use edge_coupled");

  const Atoms atoms = compress(env.pop);
  const Coefs c = coefs(env);
  EdgeReport rep;
  rep.L_plus = we.L;
  rep.m1_at_edge = -1.0 / we.l;
  rep.varsigma = we.v;
  rep.regime = Regime::Weibull;
  rep.d = we.tail.d;
  double phi = 0;
  for (std::size_t k = 0; k < atoms.sigma.size(); ++k)
    phi += atoms.weight[k] * atoms.sigma[k] / (-we.L + atoms.sigma[k] * we.v.s2);
  rep.residual_F = std::abs(c.a * phi - rep.m1_at_edge);
  rep.residual_edge = rep.residual_F * we.l;
  const double slope = (1.0 - env.phi * we.v.s3) / we.v.s4;
  const double rate = std::pow(we.tail.edge_constant * static_cast<double>(env.n), -1.0 / (we.tail.d + 1));
  rep.standardization = {we.L, slope * rate / (we.l * we.l), 1.0 / (we.tail.d + 1)};
  return rep;
}

EdgeReport edge_coupled(const SolverEnv& env) {
  const Atoms atoms = compress(env.pop);
  const Coefs c = coefs(env);
  const double m_lo = -1.0 / max_weight(env);

  std::vector<double> grid;
  for (int k = 1; k < 100; ++k) grid.push_back(k / 100.0);
  for (int j = 1; j <= 40; ++j) grid.push_back(1.0 - std::pow(10.0, -2.0 - j / 4.0));

  auto crit_at = [&](double t) { return edge_point(env, atoms, c, m_lo * t).crit; };
  double t_lo = 0, t_hi = -1;
  for (double t : grid) {
    if (crit_at(t) >= 0) {
      t_hi = t;
      break;
    }
    t_lo = t;
  }
  if (t_hi < 0)
    throw WrongRegimeError(
        "edge_coupled: dF/dm does not vanish before m1 = -1/l; the edge is of Weibull type (use "
        "edge_weibull_regime)");
  if (t_lo == 0) t_lo = t_hi / 1e6;

  boost::uintmax_t iters = 300;
  auto r = boost::math::tools::toms748_solve(crit_at, t_lo, t_hi, boost::math::tools::eps_tolerance<double>(53),
                                             iters);
  const double t_star = 0.5 * (r.first + r.second);
  const double m_star = m_lo * t_star;
  const auto ep = edge_point(env, atoms, c, m_star);

  EdgeReport rep;
  rep.L_plus = ep.x;
  rep.m1_at_edge = m_star;
  double phi = 0;
  for (std::size_t k = 0; k < atoms.sigma.size(); ++k)
    phi += atoms.weight[k] * atoms.sigma[k] / (-ep.x + atoms.sigma[k] * ep.w);
  rep.residual_F = std::abs(c.a * phi - m_star);
  rep.residual_edge = std::abs(ep.crit);

  TailClass storage;
  const BoundedTail* tail = bounded_tail(env, storage);
  const auto [W, S2] = real_sums(env, m_star);
  rep.varsigma.vartheta = c.b * c.b * std::max(S2 - W * W, 0.0);
  if (tail) {
    rep.d = tail->d;
    const double keep = rep.varsigma.vartheta;
    rep.varsigma = varsigma_constants(env, rep.L_plus, m_star);
    rep.varsigma.vartheta = keep;
  } else {
    rep.d = kNaN;
    rep.varsigma.s1 = rep.varsigma.s2 = rep.varsigma.s3 = rep.varsigma.s4 = kNaN;
  }

  const double n = static_cast<double>(env.n);
  if (tail && tail->d > 1) {
    rep.regime = Regime::Gaussian;
    rep.standardization = {rep.L_plus, std::sqrt(rep.varsigma.vartheta / n), 0.5};
  } else {
    rep.regime = Regime::TWMixture;
    const auto fit = fit_gamma(env, rep.L_plus);
    rep.gamma = fit.gamma;
    rep.standardization = {rep.L_plus, std::pow(n, -2.0 / 3.0) / fit.gamma, 2.0 / 3.0};
  }
  return rep;
}

RegimeReport classify_regime(const SolverEnv& env) {
  TailClass storage;
  const BoundedTail* tail = bounded_tail(env, storage);
  if (!tail)
    throw UnsupportedTailError("classify_regime: requires a bounded-support law (unbounded laws diverge)");
  RegimeReport out;
  out.d = tail->d;
  out.phi_inv = 1.0 / env.phi;
  std::ostringstream why;
  if (tail->d <= 1) {
    out.regime = Regime::TWMixture;
    out.varsigma3 = kInf;
    const auto rep = edge_coupled(env);
    out.vartheta = rep.varsigma.vartheta;
    const double threshold = std::pow(static_cast<double>(env.n), -1.0 / 3.0);
    out.gaussian_dominates = rep.varsigma.vartheta > threshold;
    why << "d = " << tail->d << " <= 1: square-root edge; vartheta = " << rep.varsigma.vartheta
        << (*out.gaussian_dominates ? " > " : " <= ") << "n^{-1/3} = " << threshold;
    out.rationale = why.str();
    return out;
  }
  const auto we = solve_weibull_edge(env);
  out.varsigma3 = we.v.s3;
  const double gap = out.phi_inv - out.varsigma3;
  if (std::abs(gap) <= kCriticalTol) {
    std::ostringstream os;
    os << "classify_regime: critical case phi^{-1} = " << out.phi_inv << " vs varsigma_3 = " << out.varsigma3;
    throw CriticalCaseError(os.str());
  }
  out.regime = gap > 0 ? Regime::Weibull : Regime::Gaussian;
  why << "d = " << tail->d << " > 1 and phi^{-1} = " << out.phi_inv << (gap > 0 ? " > " : " < ")
      << "varsigma_3 = " << out.varsigma3;
  out.rationale = why.str();
  return out;
}

EdgeReport edge_report(const SolverEnv& env) {
  TailClass storage;
  if (!bounded_tail(env, storage)) return edge_coupled(env);
  const auto reg = classify_regime(env);
  return reg.regime == Regime::Weibull ? edge_weibull_regime(env) : edge_coupled(env);
}

GammaFit fit_gamma(const SolverEnv& env, double L_plus) {
  std::vector<double> kappa, rho;
  const int points = 12;
  for (int i = 0; i < points; ++i) {
    const double k = std::pow(10.0, -4.0 + 2.0 * i / (points - 1));
    kappa.push_back(k);
    rho.push_back(density(L_plus - k, env, std::max(1e-9, 1e-3 * k)));
  }
  double num = 0, den = 0;
  for (int i = 0; i < points; ++i) {
    num += rho[i] * std::sqrt(kappa[i]);
    den += kappa[i];
  }
  const double slope = num / den;
  const double mean = std::accumulate(rho.begin(), rho.end(), 0.0) / points;
  double ss_res = 0, ss_tot = 0;
  for (int i = 0; i < points; ++i) {
    const double fit = slope * std::sqrt(kappa[i]);
    ss_res += (rho[i] - fit) * (rho[i] - fit);
    ss_tot += (rho[i] - mean) * (rho[i] - mean);
  }
  if (!(slope > 0)) throw NumericError("fit_gamma: density does not vanish like a square root at the edge");
  return {std::pow(M_PI * slope, 2.0 / 3.0), ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0};
}

double h_mu1(const SolverEnv& env, double mu, double d1) {
  const auto* cw = std::get_if<ConditionalWeights>(&env.weights);
  if (!cw) throw ParameterError("h_mu1: requires conditional weights");
  const Atoms atoms = compress(env.pop);
  const Coefs c = coefs(env);
  const double top = *std::max_element(cw->xi2.begin(), cw->xi2.end()) + d1;
  double V = 0;
  for (double x : cw->xi2) V += x / (top - x);
  V /= static_cast<double>(cw->xi2.size());
  double h = 0;
  for (std::size_t k = 0; k < atoms.sigma.size(); ++k)
    h += atoms.weight[k] * atoms.sigma[k] / (mu / top - atoms.sigma[k] * c.b * V);
  return c.a * h;
}

double mu1_divergent(const SolverEnv& env, std::optional<double> d1) {
  const auto* cw = std::get_if<ConditionalWeights>(&env.weights);
  if (!cw) throw ParameterError("mu1_divergent: requires conditional weights");
  if (!d1) {
    const WeightLaw* law = env.law();
    if (!law) throw ParameterError("mu1_divergent: supply d1 or attach the weight law");
    const auto tail = law->tail_class();
    if (const auto* p = std::get_if<PolyTail>(&tail))
      d1 = std::pow(static_cast<double>(cw->xi2.size()), 1.0 / p->alpha - 0.01);
    else if (std::holds_alternative<ExpTail>(tail))
      d1 = 1.0;
    else
      throw UnsupportedTailError("mu1_divergent: requires an unbounded tail");
  }
  const double top = *std::max_element(cw->xi2.begin(), cw->xi2.end()) + *d1;
  double V = 0;
  for (double x : cw->xi2) V += x / (top - x);
  V /= static_cast<double>(cw->xi2.size());
  const Atoms atoms = compress(env.pop);
  const Coefs c = coefs(env);
  const double a_low = top * atoms.sigma_max * c.b * V;

  auto f = [&](double mu) { return h_mu1(env, mu, *d1) - 1.0; };
  double hi = std::max(a_low * 1e6, 1e-300);
  int doublings = 0;
  while (f(hi) > 0) {
    if (++doublings > 60) throw SolverError("mu1_divergent: bracket expansion failed", f(hi));
    hi *= 2;
  }
  double lo = a_low * (1 + 1e-15) + 1e-300;
  if (f(lo) < 0) lo = a_low + (hi - a_low) * 1e-15;
  boost::uintmax_t iters = 500;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(53), iters);
  double mu = 0.5 * (r.first + r.second);
  double lo2 = r.first, hi2 = r.second;
  for (int i = 0; i < 200 && std::abs(f(mu)) > 1e-10 && hi2 > lo2; ++i) {
    (f(mu) > 0 ? lo2 : hi2) = mu;
    mu = 0.5 * (lo2 + hi2);
  }
  return mu;
}

double varphi(const SolverEnv& env) {
  const double sb = sigma_bar(env.pop);
  return env.kind == ModelClass::Elliptical ? sb : env.phi * sb;
}

double Lambda1Prediction::limit_cdf(double x) const {
  switch (family) {
    case LimitFamily::Frechet:
      return frechet_cdf(x, shape);
    case LimitFamily::Gumbel:
      return gumbel_cdf(x);
    case LimitFamily::Weibull:
      return weibull_max_cdf(x, shape);
    case LimitFamily::Gaussian:
      return stats::normal_cdf(x);
    case LimitFamily::TracyWidomMixture:
      return kNaN;
  }
  return kNaN;
}

Lambda1Prediction predict_lambda1(const SolverEnv& env_in, std::size_t n) {
  SolverEnv env = env_in;
  env.n = n;
  const WeightLaw* law = env.law();
  if (!law) throw ParameterError("predict_lambda1: the weight law is required");
  const auto* cw = std::get_if<ConditionalWeights>(&env.weights);
  const double top = cw ? *std::max_element(cw->xi2.begin(), cw->xi2.end()) : kNaN;

  Lambda1Prediction out;
  const auto tail = law->tail_class();
  if (const auto* p = std::get_if<PolyTail>(&tail)) {
    const double vp = varphi(env);
    const double bn = tail_threshold_b_n(*law, n);
    out.family = LimitFamily::Frechet;
    out.shape = p->alpha;
    out.point = cw ? vp * top : vp * bn;
    out.standardization = {0.0, vp * bn, 1.0 / p->alpha};
    return out;
  }
  if (std::holds_alternative<ExpTail>(tail)) {
    const double vp = varphi(env);
    const double bn = tail_threshold_b_n(*law, n);
    out.family = LimitFamily::Gumbel;
    out.point = cw ? vp * top : vp * bn;
    out.standardization = {vp * bn, vp / law->tail_rate_derivative(bn), 0.0};
    return out;
  }
  if (std::holds_alternative<DegenerateTail>(tail)) {
    const auto rep = edge_coupled(env);
    out.family = LimitFamily::TracyWidomMixture;
    out.point = rep.L_plus;
    out.gamma = rep.gamma;
    out.standardization = rep.standardization;
    out.edge = rep;
    return out;
  }

  const SolverEnv uncond = env.integrated();
  const auto reg = classify_regime(uncond);
  if (reg.regime == Regime::Weibull) {
    const auto rep = edge_weibull_regime(uncond);
    out.family = LimitFamily::Weibull;
    out.shape = rep.d + 1;
    out.standardization = rep.standardization;
    out.edge = rep;
    out.point = rep.L_plus;
    if (cw) {
      const double l = -1.0 / rep.m1_at_edge;
      out.point = rep.L_plus - (1.0 - env.phi * rep.varsigma.s3) / rep.varsigma.s4 * (l - top) / (l * top);
    }
    return out;
  }
  const auto rep = edge_coupled(uncond);
  out.family = reg.regime == Regime::Gaussian ? LimitFamily::Gaussian : LimitFamily::TracyWidomMixture;
  out.standardization = rep.standardization;
  out.gamma = rep.gamma;
  out.edge = rep;
  out.point = cw ? edge_coupled(env).L_plus : rep.L_plus;
  return out;
}

}  // namespace spectral_edge
