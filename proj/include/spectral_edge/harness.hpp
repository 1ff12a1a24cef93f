#pragma once

// Monte-Carlo experiment runner, limit-law validation and CSV/SVG output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spectral_edge/config.hpp"
#include "spectral_edge/stieltjes_solver.hpp"

namespace spectral_edge {

struct ResultRow {
  std::string experiment;
  std::string cell;    // "key=value;key=value"
  std::string metric;
  double value = 0;
  std::optional<double> se;  // absent when undefined (R = 1 or not a proportion)
  std::size_t R = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::size_t failed_cells = 0;
  std::vector<std::string> failures;  // "cell: message"

  bool complete() const { return failed_cells == 0; }
};

// Deterministic given (cfg, root_seed); replicate k of cell c draws from
// derive_seed(root_seed, {c, k}). A failing cell produces an "error" row and
// the grid continues.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t root_seed);

// Centre used for the Weibull-regime standardization of lambda_1.
enum class WeibullCenter { Population, Conditional };

struct LimitLawSpec {
  ModelKind model = SeparableIid{};
  PopulationConfig population;
  WeightLaw law = WeightLaw::exponential(1.0);
  double phi = 1.0;
  std::size_t n = 2000;
  std::size_t replicates = 2000;
  WeibullCenter weibull_center = WeibullCenter::Population;
  std::size_t workers = 0;
};

struct LimitLawResult {
  LimitFamily family = LimitFamily::Gaussian;
  Standardization standardization;
  std::vector<double> lambda1;
  std::vector<double> standardized;
  bool cdf_checked = false;  // false in the TW-mixture regime
  double ks_distance = 0;    // NaN when no CDF is checked
  double ks_pvalue = 0;
  // TW mixture: interquartile range of lambda_1 - L_hat (conditional edge).
  std::optional<double> iqr;
};

LimitLawResult validate_limit_law(const LimitLawSpec& spec, std::uint64_t root_seed);

// CSV with header "experiment,cell,metric,value,se,R". Fields containing
// commas or quotes are quoted; a missing se is written as NA.
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(std::istream& is);

// Writes the CSV and, when svg_path is given, one chart per experiment
// family. Throws on empty rows or I/O failure.
void emit_outputs(const std::vector<ResultRow>& rows, const std::string& csv_path,
                  const std::optional<std::string>& svg_path = std::nullopt);

}  // namespace spectral_edge
