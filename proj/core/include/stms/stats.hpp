#pragma once

#include <functional>
#include <span>
#include <vector>

namespace stms {

// Sum with pairwise (tree) reduction; deterministic for a fixed ordering
// of the inputs, independent of how the terms were produced.
double pairwise_sum(std::span<const double> v);

// Mean and (n-1)-normalized standard deviation.
double mean(std::span<const double> v);
double stdev(std::span<const double> v);

// Empirical quantile, linear interpolation between order statistics.
double quantile(std::vector<double> v, double p);

// Two-sided Kolmogorov-Smirnov statistic of `sample` against a CDF.
// The CDF may have jumps; the statistic handles them through left limits.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

// Asymptotic KS p-value: P(sqrt(n) D > lambda) via the Kolmogorov series.
double ks_pvalue(double d, std::size_t n);

// Upper tail of the chi-square distribution with k degrees of freedom.
double chi2_sf(double x, double k);

// Regularized incomplete gamma functions.
double gamma_p(double a, double x);  // lower
double gamma_q(double a, double x);  // upper

}  // namespace stms
