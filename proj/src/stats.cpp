#include "carloss/stats.hpp"

#include <algorithm>
#include <cmath>

#include "carloss/errors.hpp"

namespace carloss {

double quantile_type7(std::span<const double> values, double p) {
    if (values.empty()) throw InputError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("quantile probability outside [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double interquartile_range(std::span<const double> values) {
    return quantile_type7(values, 0.75) - quantile_type7(values, 0.25);
}

double median(std::span<const double> values) { return quantile_type7(values, 0.5); }

}  // namespace carloss
