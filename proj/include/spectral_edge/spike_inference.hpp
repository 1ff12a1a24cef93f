#pragma once

// Gap-ratio statistics for the number of spikes in elliptical data, their
// Monte-Carlo critical values from the order statistics of the weights, and
// the sequential spike-count estimators.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spectral_edge/weight_laws.hpp"

namespace spectral_edge {

enum class SpikeStatistic { T, T_r0 };
// G1 calibrates T, G2 calibrates T_r0.
enum class Functional { G1, G2 };

inline Functional functional_for(SpikeStatistic s) {
  return s == SpikeStatistic::T ? Functional::G1 : Functional::G2;
}

struct SpikeTestConfig {
  std::size_t r0 = 0;
  std::size_t r_star = 1;
  double alpha = 0.1;
  std::size_t N = 10000;
  WeightLaw law = WeightLaw::exponential(1.0);
  std::size_t n = 400;

  // Throws ParameterError unless 0 <= r0 < r_star, 0 < alpha < 1, N >= 100.
  void validate() const;
};

// Value of a gap-ratio statistic. A zero denominator gap gives +inf and
// sets `degenerate`.
struct GapStatistic {
  double value = 0;
  bool degenerate = false;
  std::vector<double> ratios;  // (mu_i - mu_{i+1}) / (mu_{i+1} - mu_{i+2}), i = r0+1..r_star
};

// Eigenvalues are given in descending order; indices below are 1-based.
// T = max_{r0 < i <= r_star} (mu_i - mu_{i+1}) / (mu_{i+1} - mu_{i+2}).
GapStatistic stat_T(std::span<const double> eigs, std::size_t r0, std::size_t r_star);
// T_r0 = (mu_{r0+1} - mu_{r0+2}) / (mu_{r_star+1} - mu_{r_star+2}).
GapStatistic stat_T_r0(std::span<const double> eigs, std::size_t r0, std::size_t r_star);
GapStatistic spike_statistic(SpikeStatistic which, std::span<const double> eigs, std::size_t r0,
                             std::size_t r_star);

// G1 / G2 evaluated on the descending order statistics xi2_(1) >= xi2_(2) >= ...
// (at least r_star - r0 + 2 of them). Returns +inf on a zero spacing.
double functional_value(Functional which, std::span<const double> top, std::size_t r0, std::size_t r_star);

// The k largest values of a sample, descending.
std::vector<double> top_order_statistics(std::span<const double> sample, std::size_t k);

struct CalibrationSample {
  std::vector<double> values;  // ascending, length N
  std::size_t resamples = 0;   // replicates redrawn because of a zero spacing
  std::uint64_t seed = 0;
};

CalibrationSample calibration_sample(const SpikeTestConfig& cfg, Functional which, std::uint64_t seed);

// Smallest delta in the sample with #{G <= delta} / N >= 1 - alpha.
double critical_value(std::span<const double> ascending, double alpha);

double calibrate_critical(const SpikeTestConfig& cfg, Functional which, std::uint64_t seed);

// Critical values for every r0 in [0, r_star) from one set of weight draws.
struct CriticalTable {
  std::size_t r_star = 0;
  double alpha = 0;
  std::vector<double> delta_G1;  // indexed by r0
  std::vector<double> delta_G2;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;

  double delta(std::size_t r0, SpikeStatistic which) const;
};

CriticalTable calibrate_table(const WeightLaw& law, std::size_t n, std::size_t r_star, double alpha,
                              std::size_t N, std::uint64_t seed);

struct TestOutcome {
  double statistic = 0;
  double critical_value = 0;
  bool reject = false;
  std::optional<std::uint64_t> calibration_seed;
  std::vector<double> extras;  // per-index gap ratios
  bool degenerate = false;
};

// Rejects H0: r = r0 in favour of r > r0 iff statistic > delta.
TestOutcome spike_test(std::span<const double> eigs, const SpikeTestConfig& cfg, SpikeStatistic which,
                       double delta, std::optional<std::uint64_t> calibration_seed = std::nullopt);

using DeltaProvider = std::function<double(std::size_t r0, SpikeStatistic which)>;

struct SpikeCountEstimate {
  std::size_t r1 = 0;  // from T
  std::size_t r2 = 0;  // from T_r0
  bool saturated1 = false;
  bool saturated2 = false;
};

// First r0 in 0..r_star-1 whose test accepts; r_star (saturated) otherwise.
SpikeCountEstimate estimate_r(std::span<const double> eigs, std::size_t r_star, const DeltaProvider& delta);
SpikeCountEstimate estimate_r(std::span<const double> eigs, const CriticalTable& table);

// Detectability scale: n^{1/alpha} log n (polynomial tail) or
// (log n)^{1/beta} (exponential tail).
double spike_strength_threshold(const WeightLaw& law, std::size_t n);

}  // namespace spectral_edge
