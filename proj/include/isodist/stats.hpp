#pragma once

#include <span>
#include <vector>

namespace isodist {

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> v);
/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);
/// Least-squares slope of log(y) on log(x); pairs with nonpositive entries are skipped.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace isodist
