#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spectral_edge::stats {

double normal_cdf(double x);
double normal_quantile(double p);

double mean(std::span<const double> xs);
// Population variance (divides by the sample size).
double variance(std::span<const double> xs);

// Empirical quantile of a sample, linear interpolation between order
// statistics (type 7).
double quantile(std::vector<double> xs, double q);
double interquartile_range(std::vector<double> xs);

// sup_x |F_n(x) - F(x)| for the empirical CDF of `sample`.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);
// One-sample KS p-value for distance d on n points (Kolmogorov limit with
// the Stephens finite-n correction).
double ks_pvalue(double d, std::size_t n);

// Standard error of a proportion p estimated from r draws.
double proportion_se(double p, std::size_t r);

}  // namespace spectral_edge::stats
