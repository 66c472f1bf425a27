#pragma once

#include <cstddef>
#include <vector>

namespace rct {

double mean(const std::vector<double>& x);

// Unbiased sample variance (n-1 denominator); returns 0 for n < 2.
double sample_variance(const std::vector<double>& x);

double sample_sd(const std::vector<double>& x);

// Empirical quantile with linear interpolation between order statistics
// (the convention used by most statistical software as a default).
double quantile(std::vector<double> x, double p);

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile, Wichura's AS 241 algorithm (double precision).
double normal_quantile(double p);

// Two-sided p-value from a standard normal reference.
double two_sided_p(double z);

}  // namespace rct
