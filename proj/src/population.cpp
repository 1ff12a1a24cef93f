#include "spectral_edge/population.hpp"

#include <numeric>

#include "spectral_edge/errors.hpp"

namespace spectral_edge {

PopulationSpec PopulationSpec::identity(std::size_t p) { return PopulationSpec{std::vector<double>(p, 1.0)}; }

PopulationSpec SpikedPopulation::spectrum() const {
  PopulationSpec out = base;
  for (std::size_t i = 0; i < spike_values.size(); ++i) out.sigmas[i] = spike_values[i];
  return out;
}

SpikedPopulation johnstone_spiked(std::size_t p, const std::vector<double>& spikes) {
  if (p <= spikes.size()) throw ParameterError("johnstone_spiked: p must exceed the number of spikes");
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    if (!(spikes[i] > 1.0)) throw ParameterError("johnstone_spiked: spikes must exceed 1");
    if (i > 0 && spikes[i] > spikes[i - 1]) throw ParameterError("johnstone_spiked: spikes must be descending");
  }
  return SpikedPopulation{PopulationSpec::identity(p), spikes};
}

double sigma_bar(const PopulationSpec& pop) {
  if (pop.sigmas.empty()) throw ParameterError("sigma_bar: empty population");
  return std::accumulate(pop.sigmas.begin(), pop.sigmas.end(), 0.0) / static_cast<double>(pop.p());
}

std::vector<PopulationViolation> validate(const PopulationSpec& pop, double tau) {
  if (!(tau > 0 && tau < 1)) throw ParameterError("validate: tau must lie in (0,1)");
  std::vector<PopulationViolation> out;
  for (std::size_t i = 0; i < pop.sigmas.size(); ++i) {
    const double s = pop.sigmas[i];
    if (s < tau) out.push_back({i, "below tau"});
    if (s > 1.0 / tau) out.push_back({i, "above 1/tau"});
    if (i > 0 && s > pop.sigmas[i - 1]) out.push_back({i, "not descending"});
  }
  return out;
}

std::vector<PopulationViolation> validate(const SpikedPopulation& pop, double tau) {
  auto out = validate(pop.base, tau);
  for (std::size_t i = 0; i < pop.r(); ++i) {
    if (i > 0 && pop.spike_values[i] > pop.spike_values[i - 1]) out.push_back({i, "spikes not descending"});
    if (i < pop.p() && pop.spike_values[i] <= pop.base.sigmas[0])
      out.push_back({i, "spike does not exceed the base spectrum"});
  }
  return out;
}

}  // namespace spectral_edge
