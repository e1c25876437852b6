#pragma once

#include <span>
#include <vector>

namespace carloss {

// Linear-interpolation sample quantile (Hyndman-Fan type 7):
// h = (N - 1) p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile_type7(std::span<const double> values, double p);

// Q3 - Q1 with type-7 quantiles.
double interquartile_range(std::span<const double> values);

double median(std::span<const double> values);

}  // namespace carloss
