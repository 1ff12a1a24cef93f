#pragma once

// Experiment configuration and its JSON representation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spectral_edge/matrix_model.hpp"
#include "spectral_edge/population.hpp"
#include "spectral_edge/weight_laws.hpp"

namespace spectral_edge {

enum class ExperimentKind { TypeIError, Power, EstimatorCDR, Robustness, FactorTypeIPower, FactorCDR, LimitLaw, EdgeScan };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

// Population of dimension p: `base` is "identity" or an explicit list of
// eigenvalues tiled to length p (then sorted descending); spikes replace the
// leading entries.
struct PopulationConfig {
  std::vector<double> base;  // empty means identity
  std::vector<double> spikes;

  PopulationSpec build(std::size_t p) const;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::TypeIError;
  ModelKind model = Elliptical{};
  PopulationConfig population;
  std::vector<WeightLaw> laws;              // weight settings, or multipliers for the factor experiments
  std::vector<WeightLaw> calibration_laws;  // Robustness: laws used to calibrate the critical values
  std::size_t n = 400;
  std::vector<double> phis{0.5, 1.0, 2.0};
  std::vector<std::size_t> n_list;          // LimitLaw in the TW-mixture regime
  std::size_t replicates = 2000;
  double alpha = 0.1;
  std::uint64_t root_seed = 1;
  std::size_t r0 = 2;
  std::size_t r_star = 6;
  std::size_t N = 10000;
  std::vector<double> sweep;                // sigma_3 (Power), sigma_1 (EstimatorCDR), delta (factor)
  std::size_t B = 1000;
  double m4 = 3.0;
  std::vector<double> loadings_cov{1.3, 0.8, 0.5};
  std::size_t workers = 0;                  // 0: default worker count
  std::string csv_path;
  std::string svg_path;

  // Throws ParameterError describing the first invalid field.
  void validate() const;
};

// Law from JSON: {"family": "pareto", "params": {"x_min": 0.75, "alpha": 3}}
// with optional "allow_violation": true.
WeightLaw law_from_json(const nlohmann::json& j);
nlohmann::json law_to_json(const WeightLaw& law);

// Compact text form used on the command line, e.g. "pareto:0.75,3",
// "gamma:5,5", "exp:1", "t2:3", "chi2:1", "beta:1,1,3", "uniform:1",
// "point:1". A trailing "!" admits assumption-violating parameters.
WeightLaw parse_law(const std::string& text);

ModelKind model_from_json(const nlohmann::json& j);

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace spectral_edge
