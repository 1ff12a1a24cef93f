#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace spectral_edge {

// Population covariance spectrum, stored as its eigenvalues in descending
// order (the covariance is treated as diagonal).
struct PopulationSpec {
  std::vector<double> sigmas;

  std::size_t p() const noexcept { return sigmas.size(); }
  static PopulationSpec identity(std::size_t p);

  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

// sigma_tilde = (spikes..., base_{r+1}, ..., base_p).
struct SpikedPopulation {
  PopulationSpec base;
  std::vector<double> spike_values;

  std::size_t r() const noexcept { return spike_values.size(); }
  std::size_t p() const noexcept { return base.p(); }
  // Full spiked spectrum: spikes replace the leading base eigenvalues.
  PopulationSpec spectrum() const;
};

SpikedPopulation johnstone_spiked(std::size_t p, const std::vector<double>& spikes);

double sigma_bar(const PopulationSpec& pop);

struct PopulationViolation {
  std::size_t index;  // 0-based
  std::string reason;
};

// Empty result means the spectrum satisfies tau <= sigma_i <= 1/tau and is
// descending.
std::vector<PopulationViolation> validate(const PopulationSpec& pop, double tau);
std::vector<PopulationViolation> validate(const SpikedPopulation& pop, double tau);

}  // namespace spectral_edge
