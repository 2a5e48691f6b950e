#pragma once

#include <span>
#include <vector>

namespace tsci {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile, p in (0, 1).
double normal_quantile(double p);

/// z_{alpha/2}: the upper alpha/2 point of N(0,1). Returns 0 for alpha >= 1.
double z_two_sided(double alpha);

/// Median; midpoint of the central pair for an even count. Empty input throws.
double median(std::span<const double> values);

/// Upper-alpha empirical quantile: the largest sample value t such that the
/// fraction of draws >= t is at least alpha, i.e. the
/// (floor((1 - alpha) * L) + 1)-th order statistic.
double upper_empirical_quantile(std::span<const double> draws, double alpha);

}  // namespace tsci
