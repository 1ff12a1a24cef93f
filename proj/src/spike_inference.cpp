#include "spectral_edge/spike_inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <variant>

#include "spectral_edge/errors.hpp"
#include "spectral_edge/parallel.hpp"
#include "spectral_edge/rng.hpp"

namespace spectral_edge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(double num, double den, bool& degenerate) {
  if (!(den > 0)) {
    degenerate = true;
    return kInf;
  }
  return num / den;
}

void require_length(std::span<const double> eigs, std::size_t r0, std::size_t r_star) {
  if (r0 >= r_star) throw ParameterError("spike statistic: need r0 < r_star");
  if (eigs.size() < r_star + 2) throw ParameterError("spike statistic: need at least r_star + 2 eigenvalues");
}

}  // namespace

void SpikeTestConfig::validate() const {
  if (r0 >= r_star) throw ParameterError("SpikeTestConfig: need 0 <= r0 < r_star");
  if (!(alpha > 0 && alpha < 1)) throw ParameterError("SpikeTestConfig: alpha must lie in (0, 1)");
  if (N < 100) throw ParameterError("SpikeTestConfig: N must be at least 100");
  if (n < r_star + 2) throw ParameterError("SpikeTestConfig: n must be at least r_star + 2");
  if (law.is_degenerate()) throw ParameterError("SpikeTestConfig: degenerate weight law");
}

GapStatistic stat_T(std::span<const double> eigs, std::size_t r0, std::size_t r_star) {
  require_length(eigs, r0, r_star);
  GapStatistic out;
  out.value = -kInf;
  // 1-based index i maps to eigs[i - 1].
  for (std::size_t i = r0 + 1; i <= r_star; ++i) {
    const double r = ratio(eigs[i - 1] - eigs[i], eigs[i] - eigs[i + 1], out.degenerate);
    out.ratios.push_back(r);
    out.value = std::max(out.value, r);
  }
  return out;
}

GapStatistic stat_T_r0(std::span<const double> eigs, std::size_t r0, std::size_t r_star) {
  require_length(eigs, r0, r_star);
  GapStatistic out;
  out.value = ratio(eigs[r0] - eigs[r0 + 1], eigs[r_star] - eigs[r_star + 1], out.degenerate);
  out.ratios.push_back(out.value);
  return out;
}

GapStatistic spike_statistic(SpikeStatistic which, std::span<const double> eigs, std::size_t r0,
                             std::size_t r_star) {
  return which == SpikeStatistic::T ? stat_T(eigs, r0, r_star) : stat_T_r0(eigs, r0, r_star);
}

double functional_value(Functional which, std::span<const double> top, std::size_t r0, std::size_t r_star) {
  const std::size_t k = r_star - r0;
  if (top.size() < k + 2) throw ParameterError("functional_value: too few order statistics");
  bool degenerate = false;
  if (which == Functional::G1) {
    double best = -kInf;
    for (std::size_t i = 1; i <= k; ++i)
      best = std::max(best, ratio(top[i - 1] - top[i], top[i] - top[i + 1], degenerate));
    return best;
  }
  return ratio(top[0] - top[1], top[k] - top[k + 1], degenerate);
}

std::vector<double> top_order_statistics(std::span<const double> sample, std::size_t k) {
  k = std::min(k, sample.size());
  std::vector<double> v(sample.begin(), sample.end());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<>());
  v.resize(k);
  return v;
}

namespace {

// Top `k` order statistics of n fresh draws, redrawn while any spacing among
// them is zero.
std::vector<double> draw_top(const WeightLaw& law, std::size_t n, std::size_t k, std::uint64_t seed,
                             std::size_t& resamples) {
  std::vector<double> buf(n);
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(derive_seed(seed, {attempt}));
    law.sample_into(buf, rng);
    auto top = top_order_statistics(buf, k);
    bool tie = false;
    for (std::size_t i = 0; i + 1 < top.size(); ++i)
      if (!(top[i] > top[i + 1])) tie = true;
    if (!tie) return top;
    ++resamples;
    if (attempt > 1000) throw NumericError("calibration: weight law keeps producing tied order statistics");
  }
}

}  // namespace

CalibrationSample calibration_sample(const SpikeTestConfig& cfg, Functional which, std::uint64_t seed) {
  cfg.validate();
  CalibrationSample out;
  out.seed = seed;
  out.values.resize(cfg.N);
  std::vector<std::size_t> redraws(cfg.N, 0);
  const std::size_t k = cfg.r_star - cfg.r0 + 2;
  parallel_for(cfg.N, [&](std::size_t rep) {
    auto top = draw_top(cfg.law, cfg.n, k, derive_seed(seed, {rep}), redraws[rep]);
    out.values[rep] = functional_value(which, top, cfg.r0, cfg.r_star);
  });
  for (auto r : redraws) out.resamples += r;
  std::sort(out.values.begin(), out.values.end());
  return out;
}

double critical_value(std::span<const double> ascending, double alpha) {
  if (ascending.empty()) throw ParameterError("critical_value: empty calibration sample");
  if (!(alpha > 0 && alpha < 1)) throw ParameterError("critical_value: alpha must lie in (0, 1)");
  const auto N = static_cast<double>(ascending.size());
  auto count = static_cast<std::size_t>(std::ceil((1.0 - alpha) * N - 1e-9));
  count = std::clamp<std::size_t>(count, 1, ascending.size());
  return ascending[count - 1];
}

double calibrate_critical(const SpikeTestConfig& cfg, Functional which, std::uint64_t seed) {
  const auto sample = calibration_sample(cfg, which, seed);
  return critical_value(sample.values, cfg.alpha);
}

double CriticalTable::delta(std::size_t r0, SpikeStatistic which) const {
  const auto& v = which == SpikeStatistic::T ? delta_G1 : delta_G2;
  if (r0 >= v.size()) throw ParameterError("CriticalTable: r0 out of range");
  return v[r0];
}

CriticalTable calibrate_table(const WeightLaw& law, std::size_t n, std::size_t r_star, double alpha,
                              std::size_t N, std::uint64_t seed) {
  SpikeTestConfig probe{0, r_star, alpha, N, law, n};
  probe.validate();
  std::vector<std::vector<double>> tops(N);
  std::vector<std::size_t> redraws(N, 0);
  parallel_for(N, [&](std::size_t rep) {
    tops[rep] = draw_top(law, n, r_star + 2, derive_seed(seed, {rep}), redraws[rep]);
  });

  CriticalTable table;
  table.r_star = r_star;
  table.alpha = alpha;
  table.seed = seed;
  for (auto r : redraws) table.resamples += r;
  std::vector<double> g1(N), g2(N);
  for (std::size_t r0 = 0; r0 < r_star; ++r0) {
    for (std::size_t rep = 0; rep < N; ++rep) {
      g1[rep] = functional_value(Functional::G1, tops[rep], r0, r_star);
      g2[rep] = functional_value(Functional::G2, tops[rep], r0, r_star);
    }
    std::sort(g1.begin(), g1.end());
    std::sort(g2.begin(), g2.end());
    table.delta_G1.push_back(critical_value(g1, alpha));
    table.delta_G2.push_back(critical_value(g2, alpha));
  }
  return table;
}

TestOutcome spike_test(std::span<const double> eigs, const SpikeTestConfig& cfg, SpikeStatistic which,
                       double delta, std::optional<std::uint64_t> calibration_seed) {
  const auto stat = spike_statistic(which, eigs, cfg.r0, cfg.r_star);
  TestOutcome out;
  out.statistic = stat.value;
  out.critical_value = delta;
  out.reject = stat.value > delta;
  out.calibration_seed = calibration_seed;
  out.extras = stat.ratios;
  out.degenerate = stat.degenerate;
  return out;
}

SpikeCountEstimate estimate_r(std::span<const double> eigs, std::size_t r_star, const DeltaProvider& delta) {
  auto scan = [&](SpikeStatistic which, bool& saturated) {
    for (std::size_t r0 = 0; r0 < r_star; ++r0) {
      const double value = spike_statistic(which, eigs, r0, r_star).value;
      if (value <= delta(r0, which)) return r0;
    }
    saturated = true;
    return r_star;
  };
  SpikeCountEstimate out;
  out.r1 = scan(SpikeStatistic::T, out.saturated1);
  out.r2 = scan(SpikeStatistic::T_r0, out.saturated2);
  return out;
}

SpikeCountEstimate estimate_r(std::span<const double> eigs, const CriticalTable& table) {
  return estimate_r(eigs, table.r_star, [&](std::size_t r0, SpikeStatistic s) { return table.delta(r0, s); });
}

double spike_strength_threshold(const WeightLaw& law, std::size_t n) {
  if (n < 1) throw ParameterError("spike_strength_threshold: n must be positive");
  const double nn = static_cast<double>(n);
  const auto tail = law.tail_class();
  if (const auto* poly = std::get_if<PolyTail>(&tail)) return std::pow(nn, 1.0 / poly->alpha) * std::log(nn);
  if (const auto* ex = std::get_if<ExpTail>(&tail)) return std::pow(std::log(nn), 1.0 / ex->beta);
  throw UnsupportedTailError("spike_strength_threshold: requires an unbounded weight law");
}

}  // namespace spectral_edge
