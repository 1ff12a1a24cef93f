#include "spectral_edge/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "spectral_edge/bootstrap_factor.hpp"
#include "spectral_edge/errors.hpp"
#include "spectral_edge/matrix_model.hpp"
#include "spectral_edge/parallel.hpp"
#include "spectral_edge/rng.hpp"
#include "spectral_edge/spike_inference.hpp"
#include "spectral_edge/stats.hpp"
#include "spectral_edge/svg_plot.hpp"

namespace spectral_edge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kCalibrationStream = 0xca11b;

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t dimension(double phi, std::size_t n) {
  const auto p = static_cast<std::size_t>(std::llround(phi * static_cast<double>(n)));
  if (p < 1) throw ParameterError("phi * n rounds to zero dimensions");
  return p;
}

ModelClass model_class(const ModelKind& kind) {
  return is_elliptical(kind) ? ModelClass::Elliptical : ModelClass::Separable;
}

std::size_t workers_for(std::size_t requested) { return requested ? requested : default_worker_count(); }

ResultRow proportion_row(const std::string& experiment, const std::string& cell, const std::string& metric,
                         std::size_t hits, std::size_t R) {
  const double p = static_cast<double>(hits) / static_cast<double>(R);
  std::optional<double> se;
  if (R > 1) se = stats::proportion_se(p, R);
  return {experiment, cell, metric, p, se, R};
}

ResultRow plain_row(const std::string& experiment, const std::string& cell, const std::string& metric, double v,
                    std::size_t R) {
  return {experiment, cell, metric, v, std::nullopt, R};
}

// One grid cell: a label and the work producing its rows.
struct Cell {
  std::string label;
  std::function<std::vector<ResultRow>(std::uint64_t cell_seed)> run;
};

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, std::uint64_t root) : cfg_(cfg), root_(root), name_(to_string(cfg.experiment)) {}

  ExperimentResult run() {
    build_cells();
    ExperimentResult out;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      try {
        auto rows = cells_[c].run(derive_seed(root_, {c}));
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      } catch (const std::exception& e) {
        ++out.failed_cells;
        out.failures.push_back(cells_[c].label + ": " + e.what());
        out.rows.push_back({name_, cells_[c].label, "error", kNaN, std::nullopt, 0});
      }
    }
    return out;
  }

 private:
  const ExperimentConfig& cfg_;
  std::uint64_t root_;
  std::string name_;
  std::vector<Cell> cells_;
  std::map<std::string, CriticalTable> tables_;

  std::size_t workers() const { return workers_for(cfg_.workers); }

  const CriticalTable& table_for(const WeightLaw& law) {
    const auto key = law.name();
    auto it = tables_.find(key);
    if (it == tables_.end()) {
      std::uint64_t h = 0;
      for (char ch : key) h = mix64(h ^ static_cast<unsigned char>(ch));
      const auto seed = derive_seed(root_, {kCalibrationStream, h});
      it = tables_.emplace(key, calibrate_table(law, cfg_.n, cfg_.r_star, cfg_.alpha, cfg_.N, seed)).first;
    }
    return it->second;
  }

  // Rejection counts of T and T_r0 at r0 over the replicates.
  std::pair<std::size_t, std::size_t> spike_rejections(const WeightLaw& data_law, const PopulationSpec& pop,
                                                       const CriticalTable& table, std::uint64_t cell_seed) {
    const std::size_t R = cfg_.replicates;
    std::vector<char> rej1(R), rej2(R);
    const double d1 = table.delta(cfg_.r0, SpikeStatistic::T);
    const double d2 = table.delta(cfg_.r0, SpikeStatistic::T_r0);
    parallel_for(
        R,
        [&](std::size_t k) {
          const auto data = sample_data(cfg_.model, pop, data_law, cfg_.n, derive_seed(cell_seed, {k}));
          const auto eigs = top_eigenvalues(data, cfg_.r_star + 2);
          rej1[k] = stat_T(eigs, cfg_.r0, cfg_.r_star).value > d1;
          rej2[k] = stat_T_r0(eigs, cfg_.r0, cfg_.r_star).value > d2;
        },
        workers());
    return {static_cast<std::size_t>(std::count(rej1.begin(), rej1.end(), 1)),
            static_cast<std::size_t>(std::count(rej2.begin(), rej2.end(), 1))};
  }

  void spike_size_cells(const std::vector<double>& extra_spike, const std::string& sweep_key, double sweep_value,
                        const std::string& metric) {
    for (const auto& law : cfg_.laws) {
      for (double phi : cfg_.phis) {
        std::string label = "law=" + law.name() + ";phi=" + num(phi);
        if (!sweep_key.empty()) label += ";" + sweep_key + "=" + num(sweep_value);
        cells_.push_back({label, [=, this](std::uint64_t seed) {
                            PopulationConfig pc = cfg_.population;
                            pc.spikes.insert(pc.spikes.end(), extra_spike.begin(), extra_spike.end());
                            std::sort(pc.spikes.begin(), pc.spikes.end(), std::greater<>());
                            const auto pop = pc.build(dimension(phi, cfg_.n));
                            const auto [h1, h2] = spike_rejections(law, pop, table_for(law), seed);
                            return std::vector<ResultRow>{
                                proportion_row(name_, label + ";stat=T", metric, h1, cfg_.replicates),
                                proportion_row(name_, label + ";stat=T_r0", metric, h2, cfg_.replicates)};
                          }});
      }
    }
  }

  void build_cells() {
    switch (cfg_.experiment) {
      case ExperimentKind::TypeIError:
        spike_size_cells({}, "", 0, "size");
        break;
      case ExperimentKind::Power:
        for (double s3 : cfg_.sweep) spike_size_cells({s3}, "sigma3", s3, "power");
        break;
      case ExperimentKind::EstimatorCDR:
        estimator_cells();
        break;
      case ExperimentKind::Robustness:
        robustness_cells();
        break;
      case ExperimentKind::FactorTypeIPower:
      case ExperimentKind::FactorCDR:
        factor_cells();
        break;
      case ExperimentKind::LimitLaw:
        limit_cells();
        break;
      case ExperimentKind::EdgeScan:
        edge_cells();
        break;
    }
  }

  void estimator_cells() {
    for (const auto& law : cfg_.laws) {
      for (double phi : cfg_.phis) {
        for (double s1 : cfg_.sweep) {
          const std::string label = "law=" + law.name() + ";phi=" + num(phi) + ";sigma1=" + num(s1);
          cells_.push_back({label, [=, this](std::uint64_t seed) {
                              PopulationConfig pc = cfg_.population;
                              pc.spikes.clear();
                              if (s1 > 1) pc.spikes.push_back(s1);
                              const std::size_t truth = pc.spikes.size();
                              const auto pop = pc.build(dimension(phi, cfg_.n));
                              const auto& table = table_for(law);
                              const std::size_t R = cfg_.replicates;
                              std::vector<char> ok1(R), ok2(R);
                              parallel_for(
                                  R,
                                  [&](std::size_t k) {
                                    const auto data = sample_data(cfg_.model, pop, law, cfg_.n, derive_seed(seed, {k}));
                                    const auto est = estimate_r(top_eigenvalues(data, cfg_.r_star + 2), table);
                                    ok1[k] = est.r1 == truth;
                                    ok2[k] = est.r2 == truth;
                                  },
                                  workers());
                              const auto c1 = static_cast<std::size_t>(std::count(ok1.begin(), ok1.end(), 1));
                              const auto c2 = static_cast<std::size_t>(std::count(ok2.begin(), ok2.end(), 1));
                              return std::vector<ResultRow>{proportion_row(name_, label, "cdr_r1", c1, R),
                                                           proportion_row(name_, label, "cdr_r2", c2, R)};
                            }});
        }
      }
    }
  }

  void robustness_cells() {
    const auto& truth = cfg_.laws.front();
    for (const auto& calib : cfg_.calibration_laws) {
      for (double phi : cfg_.phis) {
        const std::string label = "true=" + truth.name() + ";calibration=" + calib.name() + ";phi=" + num(phi);
        cells_.push_back({label, [=, this](std::uint64_t seed) {
                            const auto pop = cfg_.population.build(dimension(phi, cfg_.n));
                            const auto [h1, h2] = spike_rejections(truth, pop, table_for(calib), seed);
                            return std::vector<ResultRow>{
                                proportion_row(name_, label + ";stat=T", "size", h1, cfg_.replicates),
                                proportion_row(name_, label + ";stat=T_r0", "size", h2, cfg_.replicates)};
                          }});
      }
    }
  }

  void factor_cells() {
    const bool cdr = cfg_.experiment == ExperimentKind::FactorCDR;
    for (const auto& law : cfg_.laws) {
      for (double phi : cfg_.phis) {
        for (double delta : cfg_.sweep) {
          const std::string label = "multiplier=" + law.name() + ";phi=" + num(phi) + ";delta=" + num(delta);
          cells_.push_back({label, [=, this](std::uint64_t seed) {
                              const std::size_t p = dimension(phi, cfg_.n);
                              const std::size_t R = cfg_.replicates;
                              FactorTestConfig fcfg{cfg_.r0, cfg_.B, cfg_.alpha, law, cfg_.m4};
                              std::vector<double> outcome(R);
                              std::vector<double> pvals(R);
                              parallel_for(
                                  R,
                                  [&](std::size_t k) {
                                    const auto fd = build_factor_data(p, cfg_.n, delta, cfg_.loadings_cov,
                                                                      derive_seed(seed, {k, 0}));
                                    const auto boot_seed = derive_seed(seed, {k, 1});
                                    if (cdr) {
                                      const auto r = estimate_r_factor(fd.sample.y, fcfg, cfg_.r_star, boot_seed);
                                      outcome[k] = static_cast<double>(r);
                                      pvals[k] = r == fd.true_r ? 1.0 : 0.0;
                                    } else {
                                      const auto t = algorithm1_test(fd.sample.y, fcfg, boot_seed);
                                      outcome[k] = t.reject ? 1.0 : 0.0;
                                      pvals[k] = t.p_value;
                                    }
                                  },
                                  workers());
                              std::vector<ResultRow> rows;
                              if (cdr) {
                                const auto hits = static_cast<std::size_t>(std::count(pvals.begin(), pvals.end(), 1.0));
                                rows.push_back(proportion_row(name_, label, "cdr", hits, R));
                                rows.push_back(plain_row(name_, label, "mean_r_hat", stats::mean(outcome), R));
                              } else {
                                const auto hits =
                                    static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), 1.0));
                                rows.push_back(proportion_row(name_, label, "rejection_rate", hits, R));
                                rows.push_back(plain_row(name_, label, "mean_p_value", stats::mean(pvals), R));
                              }
                              return rows;
                            }});
        }
      }
    }
  }

  void limit_cells() {
    for (const auto& law : cfg_.laws) {
      for (double phi : cfg_.phis) {
        const std::string label = "law=" + law.name() + ";phi=" + num(phi);
        cells_.push_back({label, [=, this](std::uint64_t seed) {
                            LimitLawSpec spec;
                            spec.model = cfg_.model;
                            spec.population = cfg_.population;
                            spec.law = law;
                            spec.phi = phi;
                            spec.replicates = cfg_.replicates;
                            spec.workers = cfg_.workers;
                            std::vector<ResultRow> rows;
                            const auto sizes = cfg_.n_list.empty() ? std::vector<std::size_t>{cfg_.n} : cfg_.n_list;
                            std::optional<double> prev_iqr;
                            for (std::size_t i = 0; i < sizes.size(); ++i) {
                              spec.n = sizes[i];
                              const auto res = validate_limit_law(spec, derive_seed(seed, {i}));
                              const std::string cl = label + ";n=" + std::to_string(spec.n) +
                                                     ";family=" + to_string(res.family);
                              const auto R = cfg_.replicates;
                              if (res.cdf_checked) {
                                rows.push_back(plain_row(name_, cl, "ks_distance", res.ks_distance, R));
                                rows.push_back(plain_row(name_, cl, "ks_pvalue", res.ks_pvalue, R));
                              } else {
                                rows.push_back(plain_row(name_, cl, "not_a_cdf_check", 1.0, R));
                              }
                              rows.push_back(plain_row(name_, cl, "mean_standardized", stats::mean(res.standardized), R));
                              rows.push_back(plain_row(name_, cl, "sd_standardized",
                                                       std::sqrt(stats::variance(res.standardized)), R));
                              if (res.iqr) {
                                rows.push_back(plain_row(name_, cl, "iqr", *res.iqr, R));
                                if (prev_iqr) rows.push_back(plain_row(name_, cl, "iqr_ratio", *prev_iqr / *res.iqr, R));
                                prev_iqr = res.iqr;
                              }
                            }
                            return rows;
                          }});
      }
    }
  }

  void edge_cells() {
    for (const auto& law : cfg_.laws) {
      for (double phi : cfg_.phis) {
        const std::string label = "law=" + law.name() + ";phi=" + num(phi);
        cells_.push_back({label, [=, this](std::uint64_t) {
                            const auto pop = cfg_.population.build(dimension(phi, cfg_.n));
                            const auto env = SolverEnv::unconditional(model_class(cfg_.model), pop, law, phi, cfg_.n);
                            const auto rep = edge_report(env);
                            const std::string cl = label + ";regime=" + to_string(rep.regime);
                            std::vector<ResultRow> rows{
                                plain_row(name_, cl, "L_plus", rep.L_plus, 1),
                                plain_row(name_, cl, "m1_at_edge", rep.m1_at_edge, 1),
                                plain_row(name_, cl, "varsigma1", rep.varsigma.s1, 1),
                                plain_row(name_, cl, "varsigma2", rep.varsigma.s2, 1),
                                plain_row(name_, cl, "varsigma3", rep.varsigma.s3, 1),
                                plain_row(name_, cl, "varsigma4", rep.varsigma.s4, 1),
                                plain_row(name_, cl, "vartheta", rep.varsigma.vartheta, 1),
                            };
                            if (rep.gamma) rows.push_back(plain_row(name_, cl, "gamma", *rep.gamma, 1));
                            return rows;
                          }});
      }
    }
  }
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParameterError("CSV: unterminated quote");
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "NaN") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParameterError("CSV: bad number '" + s + "'");
  return v;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t root_seed) {
  cfg.validate();
  return Runner(cfg, root_seed).run();
}

LimitLawResult validate_limit_law(const LimitLawSpec& spec, std::uint64_t root_seed) {
  if (spec.replicates < 1) throw ParameterError("validate_limit_law: replicates must be positive");
  const std::size_t n = spec.n;
  const std::size_t p = dimension(spec.phi, n);
  const auto pop = spec.population.build(p);
  const auto cls = model_class(spec.model);
  const auto env = SolverEnv::unconditional(cls, pop, spec.law, spec.phi, n);
  const auto pred = predict_lambda1(env, n);

  LimitLawResult out;
  out.family = pred.family;
  out.standardization = pred.standardization;
  const bool tw = pred.family == LimitFamily::TracyWidomMixture;
  const bool conditional_center = tw || (pred.family == LimitFamily::Weibull &&
                                         spec.weibull_center == WeibullCenter::Conditional);
  const std::size_t R = spec.replicates;
  out.lambda1.resize(R);
  out.standardized.resize(R);
  std::vector<double> centered(R);
  parallel_for(
      R,
      [&](std::size_t k) {
        const auto data = sample_data(spec.model, pop, spec.law, n, derive_seed(root_seed, {k}));
        const double l1 = top_eigenvalues(data, 1).front();
        out.lambda1[k] = l1;
        double center = pred.standardization.center;
        if (conditional_center) {
          const auto cenv = SolverEnv::conditional(cls, pop, data.weights, spec.law);
          center = tw ? edge_coupled(cenv).L_plus : predict_lambda1(cenv, n).point;
        }
        centered[k] = l1 - center;
        out.standardized[k] = centered[k] / pred.standardization.scale;
      },
      workers_for(spec.workers));

  if (tw) {
    out.cdf_checked = false;
    out.ks_distance = kNaN;
    out.ks_pvalue = kNaN;
    out.iqr = stats::interquartile_range(centered);
    return out;
  }
  out.cdf_checked = true;
  out.ks_distance = stats::ks_distance(out.standardized, [&](double x) { return pred.limit_cdf(x); });
  out.ks_pvalue = stats::ks_pvalue(out.ks_distance, R);
  return out;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "experiment,cell,metric,value,se,R\n";
  for (const auto& r : rows) {
    os << csv_field(r.experiment) << ',' << csv_field(r.cell) << ',' << csv_field(r.metric) << ',' << num(r.value)
       << ',' << (r.se ? num(*r.se) : std::string("NA")) << ',' << r.R << '\n';
  }
}

std::vector<ResultRow> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "experiment,cell,metric,value,se,R")
    throw ParameterError("CSV: missing or unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw ParameterError("CSV: expected 6 fields in '" + line + "'");
    ResultRow r;
    r.experiment = f[0];
    r.cell = f[1];
    r.metric = f[2];
    r.value = parse_double(f[3]);
    if (f[4] != "NA") r.se = parse_double(f[4]);
    r.R = static_cast<std::size_t>(std::stoull(f[5]));
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_outputs(const std::vector<ResultRow>& rows, const std::string& csv_path,
                  const std::optional<std::string>& svg_path) {
  if (rows.empty()) throw ParameterError("emit_outputs: no rows to write");
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error("cannot open '" + csv_path + "' for writing");
    write_csv(out, rows);
    if (!out) throw Error("write to '" + csv_path + "' failed");
  }
  if (svg_path && !svg_path->empty()) {
    std::ofstream out(*svg_path, std::ios::binary);
    if (!out) throw Error("cannot open '" + *svg_path + "' for writing");
    out << render_result_charts(rows);
    if (!out) throw Error("write to '" + *svg_path + "' failed");
  }
}

}  // namespace spectral_edge
