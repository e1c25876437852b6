#include "carloss/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "carloss/errors.hpp"

namespace carloss {

double effective_sample_size(std::span<const double> chain) {
    const std::size_t n = chain.size();
    if (n < 4) return static_cast<double>(n);
    const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
    double var0 = 0.0;
    for (double v : chain) var0 += (v - mean) * (v - mean);
    var0 /= static_cast<double>(n);
    if (var0 <= 0.0) return static_cast<double>(n);

    auto autocorr = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += (chain[t] - mean) * (chain[t + lag] - mean);
        return s / (static_cast<double>(n) * var0);
    };

    // Sum of consecutive autocorrelation pairs, truncated at the first
    // nonpositive pair and forced monotone.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = autocorr(2 * k) + autocorr(2 * k + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

double split_rhat(const std::vector<std::span<const double>>& chains) {
    std::vector<std::span<const double>> halves;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        if (half < 2) throw InputError("split_rhat needs chains of length >= 4");
        halves.push_back(c.subspan(0, half));
        halves.push_back(c.subspan(c.size() - half, half));
    }
    std::size_t len = halves.front().size();
    for (const auto& h : halves) len = std::min(len, h.size());

    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(len);
    std::vector<double> means;
    double within = 0.0;
    for (const auto& h : halves) {
        double mu = 0.0;
        for (std::size_t t = 0; t < len; ++t) mu += h[t];
        mu /= n;
        double s2 = 0.0;
        for (std::size_t t = 0; t < len; ++t) s2 += (h[t] - mu) * (h[t] - mu);
        within += s2 / (n - 1.0);
        means.push_back(mu);
    }
    within /= m;
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    double between = 0.0;
    for (double mu : means) between += (mu - grand) * (mu - grand);
    between *= n / (m - 1.0);

    if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus = (n - 1.0) / n * within + between / n;
    return std::sqrt(var_plus / within);
}

}  // namespace carloss
