// Acceptance suite: one PASS/FAIL line per criterion, INFO lines for
// diagnostics. The default profile uses reduced replicate counts with
// tolerances widened by sqrt(2000 / R); --full runs the reference sizes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spectral_edge/bootstrap_factor.hpp"
#include "spectral_edge/harness.hpp"
#include "spectral_edge/matrix_model.hpp"
#include "spectral_edge/rng.hpp"
#include "spectral_edge/spike_inference.hpp"
#include "spectral_edge/stats.hpp"
#include "spectral_edge/stieltjes_solver.hpp"

using namespace spectral_edge;

namespace {

struct Profile {
  bool full = false;
  std::size_t limit_R = 200;
  std::size_t spike_R = 200;
  std::size_t factor_R = 50;
  std::size_t factor_B = 200;
  std::size_t clt_B = 2000;
  std::size_t spacing_R = 2000;
  std::uint64_t seed = 20240601;

  // Multiplier applied to Monte-Carlo tolerances calibrated for R = 2000.
  static double widen(std::size_t R) { return std::sqrt(2000.0 / static_cast<double>(R)); }
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s [%2d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

void info(const std::string& line) {
  std::printf("INFO      %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Every row of `rows` with the metric; the detail lists the offenders.
Verdict band_check(const std::vector<ResultRow>& rows, const std::string& metric, double lo, double hi) {
  bool ok = true;
  std::size_t count = 0;
  double worst_lo = 1e9, worst_hi = -1e9;
  std::ostringstream bad;
  for (const auto& r : rows) {
    if (r.metric == "error") {
      ok = false;
      bad << " error@" << r.cell;
      continue;
    }
    if (r.metric != metric) continue;
    ++count;
    worst_lo = std::min(worst_lo, r.value);
    worst_hi = std::max(worst_hi, r.value);
    if (!(r.value >= lo && r.value <= hi)) {
      ok = false;
      bad << " " << r.cell << "=" << fmt(r.value, 3);
    }
  }
  std::ostringstream os;
  os << count << " cells, range [" << fmt(worst_lo, 3) << ", " << fmt(worst_hi, 3) << "] vs band [" << fmt(lo, 3)
     << ", " << fmt(hi, 3) << "]";
  if (!ok) os << "; outside:" << bad.str();
  return {ok && count > 0, os.str()};
}

ExperimentConfig spike_config(ExperimentKind kind, std::size_t R) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.model = Elliptical{};
  cfg.population.spikes = {25, 20};
  cfg.laws = {WeightLaw::gamma(5, 5), WeightLaw::pareto(0.75, 3), WeightLaw::exponential(1),
              WeightLaw::squared_student_t(3, true)};
  cfg.n = 400;
  cfg.replicates = R;
  cfg.r0 = 2;
  cfg.r_star = 6;
  cfg.N = 10000;
  cfg.alpha = 0.1;
  return cfg;
}

Verdict mp_edges() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  for (double phi : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto env = SolverEnv::unconditional(ModelClass::Separable, PopulationSpec::identity(100), WeightLaw::point_mass(1), phi);
    worst = std::max(worst, std::abs(edge_coupled(env).L_plus - std::pow(1 + std::sqrt(phi), 2)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-8 && secs < 1.0, "max error " + fmt(worst, 3) + " (tol 1e-8), " + fmt(secs, 3) + " s (limit 1 s)"};
}

Verdict beta_constants() {
  const auto env = SolverEnv::unconditional(ModelClass::Separable, PopulationSpec::identity(100),
                                            WeightLaw::scaled_beta(1, 1, 3), 2.0, 2000);
  const auto rep = edge_report(env);
  const double errs[] = {std::abs(rep.varsigma.s2 - 0.5), std::abs(rep.varsigma.s1 - 1.0), std::abs(rep.L_plus - 2.5),
                         std::abs(rep.varsigma.s3 - 0.25), std::abs(rep.varsigma.s4 - 0.5)};
  const double worst = *std::max_element(std::begin(errs), std::end(errs));
  return {worst <= 1e-8 && rep.regime == Regime::Weibull,
          "max error " + fmt(worst, 3) + ", regime " + to_string(rep.regime)};
}

LimitLawResult limit_run(const WeightLaw& law, double phi, std::size_t n, std::size_t R, std::uint64_t seed,
                         WeibullCenter center = WeibullCenter::Population) {
  LimitLawSpec spec;
  spec.model = SeparableIid{};
  spec.law = law;
  spec.phi = phi;
  spec.n = n;
  spec.replicates = R;
  spec.weibull_center = center;
  return validate_limit_law(spec, seed);
}

Verdict limit_check(const LimitLawResult& res, LimitFamily expected, double tol) {
  std::ostringstream os;
  os << "family " << to_string(res.family) << ", KS " << fmt(res.ks_distance, 3) << " (tol " << fmt(tol, 3)
     << "), mean " << fmt(stats::mean(res.standardized), 3) << ", sd "
     << fmt(std::sqrt(stats::variance(res.standardized)), 3) << ", R " << res.standardized.size();
  return {res.family == expected && res.cdf_checked && res.ks_distance <= tol, os.str()};
}

Verdict solver_contracts() {
  const double phi = 0.5;
  const auto env = SolverEnv::unconditional(ModelClass::Separable, PopulationSpec::identity(100), WeightLaw::point_mass(1), phi);
  const double lo = std::pow(1 - std::sqrt(phi), 2), hi = std::pow(1 + std::sqrt(phi), 2);
  double worst_res = 0, min_im = 1e9;
  for (int i = 0; i < 50; ++i) {
    const double E = -0.5 + (hi + 1.0) * i / 49.0;
    const auto t = solve_m1({E, 0.01}, env);
    worst_res = std::max(worst_res, t.residual);
    min_im = std::min(min_im, t.m1.imag());
  }
  const int k = 400;
  double total = 0;
  for (int i = 0; i < k; ++i) {
    const double t = (i + 0.5) * (M_PI / 2) / k;
    const double x = lo + (hi - lo) * std::sin(t) * std::sin(t);
    total += density(x, env) * (hi - lo) * std::sin(2 * t) * (M_PI / 2) / k;
  }
  return {worst_res <= 1e-10 && min_im > 0 && std::abs(total - 1) <= 0.01,
          "max residual " + fmt(worst_res, 3) + ", min Im m1 " + fmt(min_im, 3) + ", integral " + fmt(total, 6)};
}

Verdict spacing_law(std::size_t R, std::uint64_t seed) {
  const std::size_t n = 400, indices = 10;
  const auto law = WeightLaw::exponential(1);
  std::vector<std::vector<double>> spacings(indices);
  for (std::size_t r = 0; r < R; ++r) {
    auto xs = sample_weights(law, n, derive_seed(seed, {r}));
    std::partial_sort(xs.begin(), xs.begin() + static_cast<long>(indices) + 1, xs.end(), std::greater<>());
    for (std::size_t i = 0; i < indices; ++i) spacings[i].push_back(xs[i] - xs[i + 1]);
  }
  std::size_t passed = 0;
  std::ostringstream os;
  for (std::size_t i = 0; i < indices; ++i) {
    // i-th spacing from the top (1-based) is Exp(i * t) with t = 1.
    const double rate = static_cast<double>(i + 1);
    const double d = stats::ks_distance(spacings[i], [&](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-rate * x); });
    const double pv = stats::ks_pvalue(d, R);
    passed += pv >= 0.05;
    os << (i ? "," : "") << fmt(pv, 2);
  }
  return {passed >= 9, std::to_string(passed) + "/" + std::to_string(indices) + " indices pass, p-values " + os.str()};
}

std::string csv_of(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::ostringstream os;
  write_csv(os, run_experiment(cfg, seed).rows);
  return os.str();
}

Verdict determinism(std::uint64_t seed) {
  std::vector<ExperimentConfig> cfgs;
  auto base = spike_config(ExperimentKind::TypeIError, 6);
  base.n = 80;
  base.N = 300;
  base.phis = {0.5, 1.0};
  base.laws = {WeightLaw::pareto(0.75, 3), WeightLaw::exponential(1)};
  cfgs.push_back(base);

  auto power = base;
  power.experiment = ExperimentKind::Power;
  power.sweep = {30};
  cfgs.push_back(power);

  auto cdr = base;
  cdr.experiment = ExperimentKind::EstimatorCDR;
  cdr.population.spikes.clear();
  cdr.sweep = {1, 40};
  cfgs.push_back(cdr);

  auto robust = base;
  robust.experiment = ExperimentKind::Robustness;
  robust.laws = {WeightLaw::pareto(0.75, 3)};
  robust.calibration_laws = {WeightLaw::pareto(1, 4)};
  cfgs.push_back(robust);

  ExperimentConfig factor;
  factor.experiment = ExperimentKind::FactorTypeIPower;
  factor.model = SeparableIid{};
  factor.laws = {WeightLaw::exponential(1)};
  factor.n = 60;
  factor.phis = {0.5};
  factor.replicates = 4;
  factor.B = 30;
  factor.r0 = 3;
  factor.sweep = {0, 3};
  cfgs.push_back(factor);

  auto fcdr = factor;
  fcdr.experiment = ExperimentKind::FactorCDR;
  fcdr.r_star = 5;
  cfgs.push_back(fcdr);

  ExperimentConfig limit;
  limit.experiment = ExperimentKind::LimitLaw;
  limit.model = SeparableIid{};
  limit.laws = {WeightLaw::pareto(0.75, 3), WeightLaw::uniform(1)};
  limit.phis = {1.0};
  limit.n = 100;
  limit.n_list = {100, 200};
  limit.replicates = 5;
  cfgs.push_back(limit);

  ExperimentConfig edge;
  edge.experiment = ExperimentKind::EdgeScan;
  edge.model = SeparableIid{};
  edge.laws = {WeightLaw::scaled_beta(1, 1, 3)};
  edge.phis = {0.5, 2.0};
  edge.n = 100;
  edge.replicates = 1;
  cfgs.push_back(edge);

  std::size_t identical = 0;
  std::ostringstream bad;
  for (auto& cfg : cfgs) {
    cfg.validate();
    cfg.workers = 1;
    const auto a = csv_of(cfg, seed);
    cfg.workers = 3;
    const auto b = csv_of(cfg, seed);
    if (a == b)
      ++identical;
    else
      bad << " " << to_string(cfg.experiment);
  }
  std::string detail = std::to_string(identical) + "/" + std::to_string(cfgs.size()) +
                       " experiment kinds byte-identical across 1 and 3 workers";
  if (identical != cfgs.size()) detail += "; differing:" + bad.str();
  return {identical == cfgs.size(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  Profile prof;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full") == 0) {
      prof.full = true;
      prof.limit_R = prof.spike_R = prof.factor_R = 2000;
      prof.factor_B = 1000;
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      prof.seed = std::stoull(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--full] [--seed N]\n");
      return 2;
    }
  }
  std::printf("profile %s: limit R=%zu, spike R=%zu, factor R=%zu B=%zu, seed %llu\n", prof.full ? "full" : "ci",
              prof.limit_R, prof.spike_R, prof.factor_R, prof.factor_B, static_cast<unsigned long long>(prof.seed));
  const auto seed = [&](std::uint64_t k) { return derive_seed(prof.seed, {k}); };
  const double wl = Profile::widen(prof.limit_R);
  const double ws = Profile::widen(prof.spike_R);
  const double wf = Profile::widen(prof.factor_R);

  report(1, "MP edge oracle", mp_edges);
  report(2, "closed-form edge constants", beta_constants);

  report(3, "Frechet limit", [&] {
    return limit_check(limit_run(WeightLaw::pareto(0.75, 3), 1.0, 2000, prof.limit_R, seed(3)), LimitFamily::Frechet, 0.05 * wl);
  });
  report(4, "Gumbel limit", [&] {
    return limit_check(limit_run(WeightLaw::exponential(1), 1.0, 2000, prof.limit_R, seed(4)), LimitFamily::Gumbel, 0.08 * wl);
  });
  report(5, "Weibull limit", [&] {
    const auto res = limit_run(WeightLaw::scaled_beta(1, 1, 3), 2.0, 2000, prof.limit_R, seed(5));
    const auto cond = limit_run(WeightLaw::scaled_beta(1, 1, 3), 2.0, 2000, prof.limit_R, seed(5), WeibullCenter::Conditional);
    info("[5] sample-max predictor: residual sd " + fmt(std::sqrt(stats::variance(cond.standardized)), 3) +
         " vs population-centred sd " + fmt(std::sqrt(stats::variance(res.standardized)), 3) + " (scale units)");
    return limit_check(res, LimitFamily::Weibull, 0.08 * wl);
  });
  report(6, "Gaussian regime", [&] {
    return limit_check(limit_run(WeightLaw::scaled_beta(1, 1, 3), 0.5, 2000, prof.limit_R, seed(6)), LimitFamily::Gaussian,
                       0.08 * wl);
  });
  report(7, "TW-mixture scaling", [&] {
    const auto a = limit_run(WeightLaw::uniform(1), 1.0, 1000, prof.limit_R, seed(7));
    const auto b = limit_run(WeightLaw::uniform(1), 1.0, 2000, prof.limit_R, derive_seed(seed(7), {1}));
    if (!a.iqr || !b.iqr || a.cdf_checked) return Verdict{false, "no IQR diagnostics in the TW-mixture regime"};
    const double ratio = *a.iqr / *b.iqr;
    return Verdict{ratio >= 1.35 && ratio <= 2.05, "IQR n=1000 " + fmt(*a.iqr, 3) + ", n=2000 " + fmt(*b.iqr, 3) +
                                                       ", ratio " + fmt(ratio, 3) + " (band [1.35, 2.05], 2^{2/3} = 1.587)"};
  });

  report(8, "spike test size", [&] {
    auto cfg = spike_config(ExperimentKind::TypeIError, prof.spike_R);
    const auto res = run_experiment(cfg, seed(8));
    return band_check(res.rows, "size", 0.1 - 0.03 * ws, 0.1 + 0.03 * ws);
  });

  report(9, "spike test power", [&] {
    std::vector<ResultRow> rows;
    auto base = spike_config(ExperimentKind::Power, prof.spike_R);
    base.phis = {0.5};
    for (const auto& law : base.laws) {
      auto cfg = base;
      cfg.laws = {law};
      cfg.sweep = {5 * spike_strength_threshold(law, cfg.n)};
      const auto res = run_experiment(cfg, derive_seed(seed(9), {rows.size()}));
      rows.insert(rows.end(), res.rows.begin(), res.rows.end());
    }
    auto fixed = base;
    fixed.sweep = {20};
    for (const auto& r : run_experiment(fixed, derive_seed(seed(9), {99})).rows)
      info("[9] sigma3=20: " + r.cell + " power " + fmt(r.value, 3));
    return band_check(rows, "power", 1.0 - 0.1 * ws, 1.0);
  });

  report(10, "robustness to misspecified calibration", [&] {
    auto cfg = spike_config(ExperimentKind::Robustness, prof.spike_R);
    cfg.laws = {WeightLaw::pareto(0.75, 3)};
    cfg.calibration_laws = {WeightLaw::pareto(1, 4), WeightLaw::squared_student_t(2, true)};
    const auto res = run_experiment(cfg, seed(10));
    return band_check(res.rows, "size", 0.105 - 0.055 * ws, 0.105 + 0.055 * ws);
  });

  report(11, "bootstrap conditional CLT", [&] {
    const auto fd = build_factor_data(200, 400, 3.0, {1.3, 0.8, 0.5}, seed(11));
    const auto law = WeightLaw::exponential(1);
    const auto mu = bootstrap_top_eigs(fd.sample.y, law, prof.clt_B, 3, derive_seed(seed(11), {1}));
    const auto lam = top_eigenvalues(fd.sample, 3);
    const auto m = moments(law);
    const double V = v_constant(3.0, law);
    // Conditional spread of T when only the multipliers vary.
    const double cond_sd = std::sqrt(3.0 * (m.m4 - m.m2 * m.m2) / V);
    double worst = 0;
    std::ostringstream os;
    for (int i = 0; i < 3; ++i) {
      std::vector<double> t(static_cast<std::size_t>(mu.rows())), u(t.size());
      for (Eigen::Index b = 0; b < mu.rows(); ++b) {
        t[static_cast<std::size_t>(b)] = std::sqrt(400.0 / V) * (mu(b, i) / lam[static_cast<std::size_t>(i)] - m.m2);
        u[static_cast<std::size_t>(b)] = t[static_cast<std::size_t>(b)] / cond_sd;
      }
      const double d = stats::ks_distance(t, stats::normal_cdf);
      worst = std::max(worst, d);
      os << (i ? ", " : "") << "i=" << i + 1 << " KS " << fmt(d, 3) << " sd " << fmt(std::sqrt(stats::variance(t)), 3);
      info("[11] i=" + std::to_string(i + 1) + " KS of T / " + fmt(cond_sd, 3) + " vs N(0,1): " +
           fmt(stats::ks_distance(u, stats::normal_cdf), 3));
    }
    return Verdict{worst <= 0.08, os.str() + " (tol 0.08)"};
  });

  report(12, "Algorithm 1 size and power", [&] {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::FactorTypeIPower;
    cfg.model = SeparableIid{};
    cfg.laws = {WeightLaw::gamma(15, 15), WeightLaw::exponential(1), WeightLaw::chi_squared(1)};
    cfg.n = 400;
    cfg.phis = {0.5, 1.0, 2.0};
    cfg.replicates = prof.factor_R;
    cfg.B = prof.factor_B;
    cfg.r0 = 3;
    cfg.sweep = {3.0, 0.0};
    const auto res = run_experiment(cfg, seed(12));
    std::vector<ResultRow> null_rows, alt_rows;
    for (const auto& r : res.rows) {
      if (r.metric == "mean_p_value") info("[12] " + r.cell + " mean p " + fmt(r.value, 3));
      if (r.metric == "error") null_rows.push_back(r);
      if (r.metric != "rejection_rate") continue;
      (r.cell.find("delta=3") != std::string::npos ? null_rows : alt_rows).push_back(r);
    }
    const auto size = band_check(null_rows, "rejection_rate", 0.1 - 0.03 * wf, 0.1 + 0.03 * wf);
    const auto power = band_check(alt_rows, "rejection_rate", 1.0 - 0.1 * wf, 1.0);
    return Verdict{size.pass && power.pass, "size: " + size.detail + "; power: " + power.detail};
  });

  report(13, "variance constants", [] {
    const double e1 = std::abs(v_constant(3, WeightLaw::exponential(1)) - 5.0);
    const double e2 = std::abs(v_constant(3, WeightLaw::chi_squared(1)) - 8.0);
    const double e3 = std::abs(v_constant(3, WeightLaw::gamma(15, 15)) - 2.2);
    const double worst = std::max({e1, e2, e3});
    return Verdict{worst <= 1e-12, "max error " + fmt(worst, 3)};
  });
  report(14, "solver contracts", solver_contracts);
  report(15, "top spacings of exponential weights", [&] { return spacing_law(prof.spacing_R, seed(15)); });
  report(16, "determinism across worker counts", [&] { return determinism(seed(16)); });

  std::printf("%d of 16 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
