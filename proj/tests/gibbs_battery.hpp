#pragma once

// Single-site validity checks for the Gibbs kernel. Each update is iterated
// with every other component frozen; the histogram of the draws is compared
// in total variation with bin masses from an independently written density
// evaluated on a 2001-point grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "carloss/sampler.hpp"
#include "test_util.hpp"

namespace carloss::testing {

struct BatteryResult {
    std::string name;
    double total_variation;
    long draws;
};

// Bin masses of an unnormalized log density: 2001-point trapezoid CDF over
// [a, b], 40 equal bins between the 0.001 and 0.999 quantiles plus two tails.
struct GridOracle {
    std::vector<double> edges;  // interior bin edges
    std::vector<double> mass;   // left tail, interior bins, right tail

    GridOracle(const std::function<double(double)>& log_density, double a, double b, int bins = 40) {
        const int points = 2001;
        std::vector<double> x(points), f(points), cdf(points, 0.0);
        double fmax = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < points; ++k) {
            x[k] = a + (b - a) * k / (points - 1);
            f[k] = log_density(x[k]);
            fmax = std::max(fmax, f[k]);
        }
        for (auto& v : f) v = std::exp(v - fmax);
        for (int k = 1; k < points; ++k) cdf[k] = cdf[k - 1] + 0.5 * (f[k] + f[k - 1]) * (x[k] - x[k - 1]);
        for (auto& v : cdf) v /= cdf.back();
        auto cdf_at = [&](double t) {
            if (t <= a) return 0.0;
            if (t >= b) return 1.0;
            const double pos = (t - a) / (b - a) * (points - 1);
            const int k = std::min(static_cast<int>(pos), points - 2);
            return cdf[k] + (pos - k) * (cdf[k + 1] - cdf[k]);
        };
        auto quantile = [&](double p) {
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
            return x[static_cast<std::size_t>(it - cdf.begin())];
        };
        const double lo = quantile(0.001), hi = quantile(0.999);
        for (int k = 0; k <= bins; ++k) edges.push_back(lo + (hi - lo) * k / bins);
        mass.push_back(cdf_at(edges.front()));
        for (int k = 0; k < bins; ++k) mass.push_back(cdf_at(edges[k + 1]) - cdf_at(edges[k]));
        mass.push_back(1.0 - cdf_at(edges.back()));
    }

    double total_variation(const std::vector<double>& samples) const {
        std::vector<double> counts(mass.size(), 0.0);
        for (double s : samples) {
            std::size_t bin;
            if (s < edges.front()) bin = 0;
            else if (s >= edges.back()) bin = mass.size() - 1;
            else bin = 1 + static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), s) - edges.begin() - 1);
            counts[bin] += 1.0;
        }
        double tv = 0.0;
        for (std::size_t k = 0; k < mass.size(); ++k) tv += std::abs(counts[k] / samples.size() - mass[k]);
        return 0.5 * tv;
    }
};

inline double normal_log_density(double x, double mean, double var) { return -0.5 * (x - mean) * (x - mean) / var; }

inline std::vector<BatteryResult> run_gibbs_battery(long iterations = 400000, std::uint64_t seed = 99) {
    std::vector<BatteryResult> out;
    Rng rng(seed);
    const auto pair = NeighborGraph::from_edges(2, {{0, 1}});
    const std::vector<std::string> ids{"A", "B"};

    // beta: intercept plus covariate on a 3-region path, rho and tau frozen.
    {
        const auto g = NeighborGraph::from_edges(3, {{0, 1}, {1, 2}});
        MatrixXd x(3, 2);
        x << 1.0, -1.0, 1.0, 0.5, 1.0, 2.0;
        const VectorXd z = (VectorXd(3) << 1.0, 2.5, 4.0).finished();
        PriorSpec pri;
        pri.sigma2_beta0 = 4.0;
        pri.sigma2_betaj = 2.0;
        const GibbsKernel k(AreaDataset({"a", "b", "c"}, z, x), g, pri);
        ChainState s{VectorXd::Zero(2), 0.4, 0.7, z};
        // closed form: precision X'(I - rho C)X / tau^2 + diag(1/4, 1/2)
        MatrixXd c = MatrixXd::Zero(3, 3);
        c(0, 1) = c(1, 0) = c(1, 2) = c(2, 1) = 1.0;
        const MatrixXd q = (MatrixXd::Identity(3, 3) - 0.4 * c) / 0.49;
        MatrixXd prec = x.transpose() * q * x;
        prec(0, 0) += 0.25;
        prec(1, 1) += 0.5;
        const MatrixXd cov = prec.inverse();
        const VectorXd mean = cov * (x.transpose() * q * z);
        std::vector<double> b0, b1;
        const long m = iterations / 2;
        for (long t = 0; t < m; ++t) {
            k.sample_beta(s, rng);
            b0.push_back(s.beta(0));
            b1.push_back(s.beta(1));
        }
        for (int j = 0; j < 2; ++j) {
            const double sd = std::sqrt(cov(j, j));
            const GridOracle oracle([&](double v) { return normal_log_density(v, mean(j), cov(j, j)); },
                                    mean(j) - 9 * sd, mean(j) + 9 * sd);
            out.push_back({"beta" + std::to_string(j) + " conditional", oracle.total_variation(j == 0 ? b0 : b1), m});
        }
    }

    // rho on two regions: (1 - rho^2)^{1/2} exp(-(r1^2 + r2^2 - 2 rho r1 r2) / (2 tau^2))
    for (const auto& [r1, r2, tau] : std::vector<std::array<double, 3>>{{0.8, 0.6, 0.7}, {1.0, -0.5, 1.5}}) {
        const GibbsKernel k(AreaDataset::intercept_only(ids, (VectorXd(2) << r1, r2).finished()), pair, PriorSpec{});
        ChainState s{VectorXd::Zero(1), 0.0, tau, (VectorXd(2) << r1, r2).finished()};
        std::vector<double> draws;
        for (long t = 0; t < iterations; ++t) {
            k.sample_rho(s, 0.6, rng);
            draws.push_back(s.rho);
        }
        const GridOracle oracle(
            [&](double rho) {
                const double w = 1.0 - rho * rho;
                if (w <= 0.0) return -std::numeric_limits<double>::infinity();
                return 0.5 * std::log(w) - (r1 * r1 + r2 * r2 - 2.0 * rho * r1 * r2) / (2.0 * tau * tau);
            },
            -1.0, 1.0);
        out.push_back({"rho conditional, two regions (r = " + std::to_string(r1) + ", " + std::to_string(r2) + ")",
                       oracle.total_variation(draws), iterations});
    }

    // rho on a 6-region graph, log determinant from the eigenvalues.
    {
        const auto g = NeighborGraph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {1, 4}});
        const VectorXd y = (VectorXd(6) << 0.3, 1.1, -0.4, 0.9, 0.2, -1.3).finished();
        const GibbsKernel k(AreaDataset::intercept_only(region_labels(6), y), g, PriorSpec{});
        ChainState s{VectorXd::Constant(1, 0.1), 0.0, 0.9, y};
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.c());
        const VectorXd ev = es.eigenvalues();
        const VectorXd r = y.array() - 0.1;
        const double rr = r.squaredNorm(), rcr = r.dot(g.c() * r);
        const double lo = 1.0 / ev.minCoeff(), hi = 1.0 / ev.maxCoeff();
        std::vector<double> draws;
        for (long t = 0; t < iterations; ++t) {
            k.sample_rho(s, 0.3, rng);
            draws.push_back(s.rho);
        }
        const GridOracle oracle(
            [&](double rho) {
                double ld = 0.0;
                for (Eigen::Index i = 0; i < ev.size(); ++i) {
                    const double w = 1.0 - rho * ev(i);
                    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
                    ld += std::log(w);
                }
                return 0.5 * ld - (rr - rho * rcr) / (2.0 * 0.81);
            },
            lo, hi);
        out.push_back({"rho conditional, six regions", oracle.total_variation(draws), iterations});
    }

    // tau with the conjugate inverse-gamma prior: tau^2 ~ IG(a + n/2, b + S/2).
    // Histogrammed on log tau, density p(tau) tau.
    auto tau_case = [&](const std::string& name, const VectorXd& y, double rho, double a, double b) {
        PriorSpec pri;
        pri.tau_prior = TauPriorKind::inverse_gamma;
        pri.ig_shape = a;
        pri.ig_rate = b;
        const GibbsKernel k(AreaDataset::intercept_only(ids, y), pair, pri);
        ChainState s{VectorXd::Zero(1), rho, 1.0, y};
        const double quad = y.squaredNorm() - 2.0 * rho * y(0) * y(1);
        const double shape = a + 1.0, rate = b + quad / 2.0;
        std::vector<double> draws;
        for (long t = 0; t < iterations; ++t) {
            k.sample_tau(s, 0.8, rng);
            draws.push_back(std::log(s.tau));
        }
        // IG(shape, rate) on v = tau^2 = exp(2u): log p(u) = -shape * 2u - rate e^{-2u} + const
        const double mode = 0.5 * std::log(rate / shape);
        const GridOracle oracle([&](double u) { return -2.0 * shape * u - rate * std::exp(-2.0 * u); }, mode - 4.0,
                                mode + 6.0);
        out.push_back({name, oracle.total_variation(draws), iterations});
    };
    tau_case("tau conditional, conjugate prior", (VectorXd(2) << 1.2, -0.3).finished(), 0.3, 2.0, 1.0);
    tau_case("tau conditional, zero residuals", VectorXd::Zero(2), 0.0, 3.0, 0.5);

    // tau with the default half-t prior.
    {
        const VectorXd y = (VectorXd(2) << 2.0, -1.5).finished();
        PriorSpec pri;
        const GibbsKernel k(AreaDataset::intercept_only(ids, y), pair, pri);
        ChainState s{VectorXd::Zero(1), -0.2, 1.0, y};
        const double quad = y.squaredNorm() + 2.0 * 0.2 * y(0) * y(1);
        const double scale = std::sqrt(10.0), df = 15.0;
        std::vector<double> draws;
        for (long t = 0; t < iterations; ++t) {
            k.sample_tau(s, 0.8, rng);
            draws.push_back(std::log(s.tau));
        }
        const GridOracle oracle(
            [&](double u) {
                const double tau = std::exp(u);
                const double prior = -0.5 * (df + 1.0) * std::log(1.0 + (tau / scale) * (tau / scale) / df);
                return prior - 2.0 * u - quad / (2.0 * tau * tau) + u;
            },
            -3.0, 6.0);
        out.push_back({"tau conditional, half-t prior", oracle.total_variation(draws), iterations});
    }

    // latent process: N(L^{-1}(Q mu + z / s2), L^{-1}), L = Q + I / s2, exact draws.
    {
        const VectorXd z = (VectorXd(2) << 3.0, 1.0).finished();
        const double s2 = 0.5, rho = 0.6, tau = 0.8, mu = 1.5;
        const GibbsKernel k(AreaDataset::intercept_only(ids, z, s2), pair, PriorSpec{});
        ChainState s{VectorXd::Constant(1, mu), rho, tau, z};
        // 2x2 inverse by hand
        const double dgn = 1.0 / (tau * tau) + 1.0 / s2, off = -rho / (tau * tau);
        const double det = dgn * dgn - off * off;
        const double var = dgn / det, cov = -off / det;
        const double qmu = (1.0 - rho) * mu / (tau * tau);
        const double b0 = qmu + z(0) / s2, b1 = qmu + z(1) / s2;
        const double m0 = (dgn * b0 - off * b1) / det, m1 = (dgn * b1 - off * b0) / det;
        std::vector<double> y0, y1, diff;
        const long m = iterations / 2;
        for (long t = 0; t < m; ++t) {
            k.sample_latent_y(s, rng);
            y0.push_back(s.y(0));
            y1.push_back(s.y(1));
            diff.push_back(s.y(0) - s.y(1));
        }
        const double sd = std::sqrt(var);
        const GridOracle o0([&](double v) { return normal_log_density(v, m0, var); }, m0 - 9 * sd, m0 + 9 * sd);
        const GridOracle o1([&](double v) { return normal_log_density(v, m1, var); }, m1 - 9 * sd, m1 + 9 * sd);
        // the difference checks the correlation
        const double dvar = 2.0 * var - 2.0 * cov, dsd = std::sqrt(dvar);
        const GridOracle od([&](double v) { return normal_log_density(v, m0 - m1, dvar); }, m0 - m1 - 9 * dsd,
                            m0 - m1 + 9 * dsd);
        out.push_back({"latent process, first region", o0.total_variation(y0), m});
        out.push_back({"latent process, second region", o1.total_variation(y1), m});
        out.push_back({"latent process, difference", od.total_variation(diff), m});
    }
    return out;
}

}  // namespace carloss::testing
