#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "spectral_edge/bootstrap_factor.hpp"
#include "spectral_edge/config.hpp"
#include "spectral_edge/errors.hpp"
#include "spectral_edge/harness.hpp"
#include "spectral_edge/matrix_model.hpp"
#include "spectral_edge/spike_inference.hpp"
#include "spectral_edge/stieltjes_solver.hpp"

using namespace spectral_edge;

namespace {

struct ModelOptions {
  std::string model = "separable";
  std::string law = "beta:1,1,3";
  double phi = 1.0;
  std::size_t n = 1000;
  std::vector<double> base;
  std::vector<double> spikes;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "elliptical | separable")->check(CLI::IsMember({"elliptical", "separable"}));
    cmd->add_option("--law", law, "weight law, e.g. pareto:0.75,3 or beta:1,1,3");
    cmd->add_option("--phi", phi, "aspect ratio p/n");
    cmd->add_option("--n", n, "sample size");
    cmd->add_option("--base", base, "population eigenvalues tiled to length p (default identity)")->delimiter(',');
    cmd->add_option("--spikes", spikes, "spiked population eigenvalues")->delimiter(',');
  }

  ModelKind kind() const { return model == "elliptical" ? ModelKind{Elliptical{}} : ModelKind{SeparableIid{}}; }
  ModelClass model_class() const { return model == "elliptical" ? ModelClass::Elliptical : ModelClass::Separable; }
  std::size_t p() const { return static_cast<std::size_t>(std::llround(phi * static_cast<double>(n))); }
  PopulationSpec population() const { return PopulationConfig{base, spikes}.build(p()); }
  SolverEnv env() const { return SolverEnv::unconditional(model_class(), population(), parse_law(law), phi, n); }
};

void print_kv(const std::string& key, double v) {
  std::cout << std::left << std::setw(16) << key << ' ' << std::setprecision(12) << v << '\n';
}
void print_kv(const std::string& key, const std::string& v) {
  std::cout << std::left << std::setw(16) << key << ' ' << v << '\n';
}

std::vector<double> read_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string last = line.substr(line.find_last_of(',') == std::string::npos ? 0 : line.find_last_of(',') + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(last, &used);
      values.push_back(v);
    } catch (const std::exception&) {
      if (values.empty()) continue;  // header line
      throw ParameterError("spectrum file: cannot parse '" + line + "'");
    }
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) throw ParameterError("data file: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParameterError("data file: empty");
  Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return y;
}

void print_edge(const EdgeReport& rep) {
  print_kv("regime", to_string(rep.regime));
  print_kv("d", rep.d);
  print_kv("L_plus", rep.L_plus);
  print_kv("m1_at_edge", rep.m1_at_edge);
  print_kv("varsigma1", rep.varsigma.s1);
  print_kv("varsigma2", rep.varsigma.s2);
  print_kv("varsigma3", rep.varsigma.s3);
  print_kv("varsigma4", rep.varsigma.s4);
  print_kv("vartheta", rep.varsigma.vartheta);
  if (rep.gamma) print_kv("gamma", *rep.gamma);
  print_kv("center", rep.standardization.center);
  print_kv("scale", rep.standardization.scale);
  print_kv("exponent", rep.standardization.exponent);
  print_kv("residual_F", rep.residual_F);
  print_kv("residual_edge", rep.residual_edge);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral edge and largest-eigenvalue toolkit for generalized elliptical data"};
  app.require_subcommand(1);
  int exit_code = 0;

  ModelOptions sim_opts;
  std::size_t sim_reps = 1;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "simulate spectra of Q = Y Y^T");
  sim_opts.attach(simulate);
  simulate->add_option("--replicates", sim_reps, "number of spectra");
  simulate->add_option("--seed", sim_seed, "root seed");
  simulate->add_option("--out", sim_out, "CSV output (default stdout)");
  simulate->callback([&] {
    std::ofstream file;
    if (!sim_out.empty()) {
      file.open(sim_out);
      if (!file) throw Error("cannot open '" + sim_out + "'");
    }
    std::ostream& os = sim_out.empty() ? std::cout : file;
    const auto law = parse_law(sim_opts.law);
    const auto pop = sim_opts.population();
    for (std::size_t k = 0; k < sim_reps; ++k) {
      const auto data = sample_data(sim_opts.kind(), pop, law, sim_opts.n, derive_seed(sim_seed, {k}));
      write_spectrum_csv(os, k, eigenvalues(data), k == 0);
    }
  });

  ModelOptions edge_opts;
  std::vector<double> grid;
  std::string density_out;
  auto* solve_edge = app.add_subcommand("solve-edge", "locate the spectral edge and its scale constants");
  edge_opts.attach(solve_edge);
  solve_edge->add_option("--density-grid", grid, "start,stop,count for a density CSV")->delimiter(',')->expected(3);
  solve_edge->add_option("--density-out", density_out, "density CSV path (default stdout after the report)");
  solve_edge->callback([&] {
    const auto env = edge_opts.env();
    print_edge(edge_report(env));
    if (grid.size() == 3) {
      std::ofstream file;
      if (!density_out.empty()) {
        file.open(density_out);
        if (!file) throw Error("cannot open '" + density_out + "'");
      }
      std::ostream& os = density_out.empty() ? std::cout : file;
      os << "E,rho\n" << std::setprecision(12);
      const auto count = static_cast<std::size_t>(grid[2]);
      for (std::size_t i = 0; i < count; ++i) {
        const double e = count > 1 ? grid[0] + (grid[1] - grid[0]) * static_cast<double>(i) / (count - 1) : grid[0];
        os << e << ',' << density(e, env) << '\n';
      }
    }
  });

  ModelOptions cls_opts;
  auto* classify = app.add_subcommand("classify", "classify the edge regime of a bounded weight law");
  cls_opts.attach(classify);
  classify->callback([&] {
    const auto rep = classify_regime(cls_opts.env());
    print_kv("regime", to_string(rep.regime));
    print_kv("d", rep.d);
    print_kv("phi_inv", rep.phi_inv);
    print_kv("varsigma3", rep.varsigma3);
    if (rep.vartheta) print_kv("vartheta", *rep.vartheta);
    if (rep.gaussian_dominates) print_kv("gaussian_part", *rep.gaussian_dominates ? "dominates" : "negligible");
    print_kv("rationale", rep.rationale);
  });

  SpikeTestConfig st_cfg;
  std::string st_law = "exp:1";
  std::string st_stat = "both";
  std::string st_input;
  std::uint64_t st_seed = 1;
  std::optional<double> st_delta;
  auto* spike = app.add_subcommand("spike-test", "test H0: r = r0 against r > r0 from a spectrum");
  spike->add_option("--r0", st_cfg.r0)->required();
  spike->add_option("--r-star", st_cfg.r_star)->required();
  spike->add_option("--alpha", st_cfg.alpha);
  spike->add_option("--N", st_cfg.N, "calibration replicates");
  spike->add_option("--n", st_cfg.n, "sample size of the data")->required();
  spike->add_option("--law", st_law, "weight law used for calibration");
  spike->add_option("--statistic", st_stat)->check(CLI::IsMember({"T", "T_r0", "both"}));
  spike->add_option("--delta", st_delta, "critical value (skips calibration)");
  spike->add_option("--seed", st_seed, "calibration seed");
  spike->add_option("--input", st_input, "spectrum CSV (one value per line or replicate_id,rank,eigenvalue)")
      ->required();
  spike->callback([&] {
    st_cfg.law = parse_law(st_law);
    st_cfg.validate();
    const auto eigs = read_spectrum(st_input);
    print_kv("strength_scale", spike_strength_threshold(st_cfg.law, st_cfg.n));
    for (auto which : {SpikeStatistic::T, SpikeStatistic::T_r0}) {
      const std::string name = which == SpikeStatistic::T ? "T" : "T_r0";
      if (st_stat != "both" && st_stat != name) continue;
      const double delta = st_delta ? *st_delta : calibrate_critical(st_cfg, functional_for(which), st_seed);
      const auto out = spike_test(eigs, st_cfg, which, delta, st_seed);
      print_kv(name + ".statistic", out.statistic);
      print_kv(name + ".critical", out.critical_value);
      print_kv(name + ".reject", out.reject ? "true" : "false");
      if (out.degenerate) print_kv(name + ".degenerate", "true");
    }
  });

  std::string cal_law = "exp:1";
  std::size_t cal_n = 400, cal_rstar = 6, cal_N = 10000;
  double cal_alpha = 0.1;
  std::uint64_t cal_seed = 1;
  std::string cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "critical values for every r0 < r_star");
  calibrate->add_option("--law", cal_law);
  calibrate->add_option("--n", cal_n);
  calibrate->add_option("--r-star", cal_rstar);
  calibrate->add_option("--alpha", cal_alpha);
  calibrate->add_option("--N", cal_N);
  calibrate->add_option("--seed", cal_seed);
  calibrate->add_option("--out", cal_out, "CSV output (default stdout)");
  calibrate->callback([&] {
    const auto table = calibrate_table(parse_law(cal_law), cal_n, cal_rstar, cal_alpha, cal_N, cal_seed);
    std::ofstream file;
    if (!cal_out.empty()) {
      file.open(cal_out);
      if (!file) throw Error("cannot open '" + cal_out + "'");
    }
    std::ostream& os = cal_out.empty() ? std::cout : file;
    os << "r0,which,alpha,delta\n" << std::setprecision(12);
    for (std::size_t r0 = 0; r0 < cal_rstar; ++r0) {
      os << r0 << ",G1," << cal_alpha << ',' << table.delta_G1[r0] << '\n';
      os << r0 << ",G2," << cal_alpha << ',' << table.delta_G2[r0] << '\n';
    }
  });

  FactorTestConfig ft_cfg;
  std::string ft_law = "exp:1";
  std::string ft_input;
  std::uint64_t ft_seed = 1;
  auto* factor = app.add_subcommand("factor-test", "multiplier-bootstrap test of H0: r >= r0");
  factor->add_option("--r0", ft_cfg.r0)->required();
  factor->add_option("--B", ft_cfg.B);
  factor->add_option("--alpha", ft_cfg.alpha);
  factor->add_option("--multiplier", ft_law, "multiplier law of xi^2");
  factor->add_option("--m4", ft_cfg.m4, "fourth moment of sqrt(n) x_11");
  factor->add_option("--seed", ft_seed);
  factor->add_option("--input", ft_input, "data matrix CSV, rows = variables, columns = samples")->required();
  factor->callback([&] {
    ft_cfg.law = parse_law(ft_law);
    const auto y = read_matrix(ft_input);
    const auto out = algorithm1_test(y, ft_cfg, ft_seed);
    print_kv("p_value", out.p_value);
    print_kv("B_star", static_cast<double>(out.B_star));
    print_kv("reject", out.reject ? "true" : "false");
    print_kv("lambda_hat", out.lambda_hat);
    if (out.degenerate) print_kv("degenerate", "true");
  });

  ModelOptions vl_opts;
  std::size_t vl_reps = 500;
  std::uint64_t vl_seed = 1;
  std::string vl_center = "population";
  auto* validate = app.add_subcommand("validate-limits", "compare standardized lambda_1 with its limit law");
  vl_opts.attach(validate);
  validate->add_option("--replicates", vl_reps);
  validate->add_option("--seed", vl_seed);
  validate->add_option("--center", vl_center, "Weibull centre: population | conditional")
      ->check(CLI::IsMember({"population", "conditional"}));
  validate->callback([&] {
    LimitLawSpec spec;
    spec.model = vl_opts.kind();
    spec.population = PopulationConfig{vl_opts.base, vl_opts.spikes};
    spec.law = parse_law(vl_opts.law);
    spec.phi = vl_opts.phi;
    spec.n = vl_opts.n;
    spec.replicates = vl_reps;
    spec.weibull_center = vl_center == "conditional" ? WeibullCenter::Conditional : WeibullCenter::Population;
    const auto res = validate_limit_law(spec, vl_seed);
    print_kv("family", to_string(res.family));
    print_kv("center", res.standardization.center);
    print_kv("scale", res.standardization.scale);
    if (res.cdf_checked) {
      print_kv("ks_distance", res.ks_distance);
      print_kv("ks_pvalue", res.ks_pvalue);
    } else {
      print_kv("cdf_check", "not performed (TW mixture)");
      if (res.iqr) print_kv("iqr", *res.iqr);
    }
  });

  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::string run_csv, run_svg;
  auto* run = app.add_subcommand("run", "run an experiment grid from a JSON config");
  run->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "override root_seed");
  run->add_option("--csv", run_csv, "override output.csv");
  run->add_option("--svg", run_svg, "override output.svg");
  run->callback([&] {
    auto cfg = load_config(run_config);
    if (!run_csv.empty()) cfg.csv_path = run_csv;
    if (!run_svg.empty()) cfg.svg_path = run_svg;
    if (cfg.csv_path.empty()) throw ParameterError("no CSV output path (set output.csv or --csv)");
    const auto result = run_experiment(cfg, run_seed.value_or(cfg.root_seed));
    std::optional<std::string> svg;
    if (!cfg.svg_path.empty()) svg = cfg.svg_path;
    emit_outputs(result.rows, cfg.csv_path, svg);
    for (const auto& f : result.failures) std::cerr << "cell failed: " << f << '\n';
    std::cout << result.rows.size() << " rows written to " << cfg.csv_path << '\n';
    if (!result.complete()) exit_code = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
