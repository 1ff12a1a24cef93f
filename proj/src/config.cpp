#include "spectral_edge/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spectral_edge/errors.hpp"

namespace spectral_edge {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ExperimentKind, const char*>, 8> kExperimentNames{{
    {ExperimentKind::TypeIError, "TypeIError"},
    {ExperimentKind::Power, "Power"},
    {ExperimentKind::EstimatorCDR, "EstimatorCDR"},
    {ExperimentKind::Robustness, "Robustness"},
    {ExperimentKind::FactorTypeIPower, "FactorTypeIPower"},
    {ExperimentKind::FactorCDR, "FactorCDR"},
    {ExperimentKind::LimitLaw, "LimitLaw"},
    {ExperimentKind::EdgeScan, "EdgeScan"},
}};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double param(const json& params, const char* key) {
  if (!params.contains(key)) throw ParameterError(std::string("weight law: missing parameter '") + key + "'");
  return params.at(key).get<double>();
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError("weight law: cannot parse number '" + item + "'");
    }
  }
  return out;
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kExperimentNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& s) {
  for (const auto& [kind, name] : kExperimentNames)
    if (lower(name) == lower(s)) return kind;
  throw ParameterError("unknown experiment '" + s + "'");
}

PopulationSpec PopulationConfig::build(std::size_t p) const {
  if (p == 0) throw ParameterError("population: p must be positive");
  if (spikes.size() >= p) throw ParameterError("population: need more dimensions than spikes");
  PopulationSpec pop = PopulationSpec::identity(p);
  if (!base.empty()) {
    for (std::size_t i = 0; i < p; ++i) pop.sigmas[i] = base[i % base.size()];
    std::sort(pop.sigmas.begin(), pop.sigmas.end(), std::greater<>());
  }
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    if (i > 0 && spikes[i] > spikes[i - 1]) throw ParameterError("population: spikes must be descending");
    pop.sigmas[i] = spikes[i];
  }
  for (double s : pop.sigmas)
    if (!(s > 0)) throw ParameterError("population: eigenvalues must be positive");
  return pop;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ParameterError("config: replicates must be at least 1");
  if (!(alpha > 0 && alpha < 1)) throw ParameterError("config: alpha must lie in (0, 1)");
  if (n < 2) throw ParameterError("config: n must be at least 2");
  if (phis.empty()) throw ParameterError("config: phi list is empty");
  for (double phi : phis)
    if (!(phi > 0)) throw ParameterError("config: phi values must be positive");
  if (experiment != ExperimentKind::EdgeScan && experiment != ExperimentKind::LimitLaw && laws.empty())
    throw ParameterError("config: no weight laws given");
  if ((experiment == ExperimentKind::LimitLaw || experiment == ExperimentKind::EdgeScan) && laws.empty())
    throw ParameterError("config: no weight laws given");
  switch (experiment) {
    case ExperimentKind::TypeIError:
    case ExperimentKind::Power:
    case ExperimentKind::EstimatorCDR:
    case ExperimentKind::Robustness:
      if (r_star < 1) throw ParameterError("config: r_star must be positive");
      if (r0 >= r_star) throw ParameterError("config: need r0 < r_star");
      if (N < 100) throw ParameterError("config: N must be at least 100");
      if ((experiment == ExperimentKind::Power || experiment == ExperimentKind::EstimatorCDR) && sweep.empty())
        throw ParameterError("config: the sweep list is empty");
      if (experiment == ExperimentKind::Robustness && calibration_laws.empty())
        throw ParameterError("config: no calibration laws given");
      for (const auto& law : laws)
        if (law.has_bounded_support() || law.is_degenerate())
          throw ParameterError("config: spike experiments need unbounded, non-degenerate laws");
      break;
    case ExperimentKind::FactorTypeIPower:
    case ExperimentKind::FactorCDR:
      if (B < 1) throw ParameterError("config: B must be positive");
      if (sweep.empty()) throw ParameterError("config: the delta list is empty");
      if (loadings_cov.empty()) throw ParameterError("config: loadings_cov is empty");
      if (r0 < 1) throw ParameterError("config: factor tests need r0 >= 1");
      break;
    case ExperimentKind::LimitLaw:
    case ExperimentKind::EdgeScan:
      break;
  }
}

WeightLaw law_from_json(const json& j) {
  if (j.is_string()) return parse_law(j.get<std::string>());
  const std::string family = lower(j.at("family").get<std::string>());
  const json params = j.value("params", json::object());
  const bool violate = j.value("allow_violation", false);
  if (family == "pareto") return WeightLaw::pareto(param(params, "x_min"), param(params, "alpha"), violate);
  if (family == "gamma") return WeightLaw::gamma(param(params, "shape"), param(params, "rate"));
  if (family == "exponential") return WeightLaw::exponential(param(params, "rate"));
  if (family == "squared_student_t") return WeightLaw::squared_student_t(param(params, "nu"), violate);
  if (family == "chi_squared") return WeightLaw::chi_squared(param(params, "k"));
  if (family == "scaled_beta")
    return WeightLaw::scaled_beta(param(params, "l"), param(params, "a"), param(params, "b"));
  if (family == "uniform") return WeightLaw::uniform(param(params, "l"));
  if (family == "point_mass") return WeightLaw::point_mass(param(params, "c"));
  throw ParameterError("weight law: unknown family '" + family + "'");
}

json law_to_json(const WeightLaw& law) {
  json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, laws::Pareto>) {
          j = {{"family", "pareto"}, {"params", {{"x_min", p.x_min}, {"alpha", p.alpha}}}};
        } else if constexpr (std::is_same_v<T, laws::Gamma>) {
          j = {{"family", "gamma"}, {"params", {{"shape", p.shape}, {"rate", p.rate}}}};
        } else if constexpr (std::is_same_v<T, laws::Exponential>) {
          j = {{"family", "exponential"}, {"params", {{"rate", p.rate}}}};
        } else if constexpr (std::is_same_v<T, laws::SquaredStudentT>) {
          j = {{"family", "squared_student_t"}, {"params", {{"nu", p.nu}}}};
        } else if constexpr (std::is_same_v<T, laws::ChiSquared>) {
          j = {{"family", "chi_squared"}, {"params", {{"k", p.k}}}};
        } else if constexpr (std::is_same_v<T, laws::ScaledBeta>) {
          j = {{"family", "scaled_beta"}, {"params", {{"l", p.l}, {"a", p.a}, {"b", p.b}}}};
        } else if constexpr (std::is_same_v<T, laws::Uniform>) {
          j = {{"family", "uniform"}, {"params", {{"l", p.l}}}};
        } else {
          j = {{"family", "point_mass"}, {"params", {{"c", p.c}}}};
        }
      },
      law.params());
  if (law.assumption_violating()) j["allow_violation"] = true;
  return j;
}

WeightLaw parse_law(const std::string& text_in) {
  std::string text = text_in;
  bool violate = false;
  if (!text.empty() && text.back() == '!') {
    violate = true;
    text.pop_back();
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ParameterError("weight law: expected family:params, got '" + text_in + "'");
  const std::string family = lower(text.substr(0, colon));
  const auto v = parse_numbers(text.substr(colon + 1));
  auto need = [&](std::size_t k) {
    if (v.size() != k)
      throw ParameterError("weight law '" + family + "' takes " + std::to_string(k) + " parameter(s)");
  };
  if (family == "pareto") return need(2), WeightLaw::pareto(v[0], v[1], violate);
  if (family == "gamma") return need(2), WeightLaw::gamma(v[0], v[1]);
  if (family == "exp" || family == "exponential") return need(1), WeightLaw::exponential(v[0]);
  if (family == "t2") return need(1), WeightLaw::squared_student_t(v[0], violate);
  if (family == "chi2") return need(1), WeightLaw::chi_squared(v[0]);
  if (family == "beta") return need(3), WeightLaw::scaled_beta(v[0], v[1], v[2]);
  if (family == "uniform") return need(1), WeightLaw::uniform(v[0]);
  if (family == "point") return need(1), WeightLaw::point_mass(v[0]);
  throw ParameterError("weight law: unknown family '" + family + "'");
}

ModelKind model_from_json(const json& j) {
  const std::string kind = lower(j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>());
  if (kind == "elliptical") return Elliptical{};
  if (kind != "separable") throw ParameterError("model: expected 'elliptical' or 'separable'");
  SeparableIid sep;
  if (j.is_object()) {
    const std::string entry = lower(j.value("entry", std::string("gaussian")));
    if (entry == "gaussian") {
      sep.entry = EntryDist::Gaussian;
    } else if (entry == "rademacher") {
      sep.entry = EntryDist::Rademacher;
    } else if (entry == "student_t") {
      sep.entry = EntryDist::StudentT;
      sep.nu = j.value("nu", 10.0);
    } else {
      throw ParameterError("model: unknown entry distribution '" + entry + "'");
    }
  }
  return sep;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("population")) {
    const auto& pj = j.at("population");
    if (pj.contains("base") && pj.at("base").is_array()) c.population.base = pj.at("base").get<std::vector<double>>();
    read(pj, "spikes", c.population.spikes);
  }
  if (j.contains("law")) c.laws.push_back(law_from_json(j.at("law")));
  if (j.contains("laws"))
    for (const auto& lj : j.at("laws")) c.laws.push_back(law_from_json(lj));
  if (j.contains("calibration_laws"))
    for (const auto& lj : j.at("calibration_laws")) c.calibration_laws.push_back(law_from_json(lj));
  read(j, "n", c.n);
  if (j.contains("phi")) {
    const auto& pj = j.at("phi");
    c.phis = pj.is_array() ? pj.get<std::vector<double>>() : std::vector<double>{pj.get<double>()};
  }
  read(j, "n_list", c.n_list);
  read(j, "replicates", c.replicates);
  read(j, "alpha", c.alpha);
  read(j, "root_seed", c.root_seed);
  read(j, "r0", c.r0);
  read(j, "r_star", c.r_star);
  read(j, "N", c.N);
  read(j, "sweep", c.sweep);
  read(j, "B", c.B);
  read(j, "m4", c.m4);
  read(j, "loadings_cov", c.loadings_cov);
  read(j, "workers", c.workers);
  if (j.contains("output")) {
    read(j.at("output"), "csv", c.csv_path);
    read(j.at("output"), "svg", c.svg_path);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ParameterError("config '" + path + "': " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw ParameterError("config '" + path + "': " + e.what());
  }
}

}  // namespace spectral_edge
