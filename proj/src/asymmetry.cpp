#include "carloss/asymmetry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carloss/errors.hpp"
#include "carloss/sampler.hpp"
#include "carloss/stats.hpp"

namespace carloss {

PowerRatio power_ratio(std::span<const double> residuals) {
    if (residuals.empty()) throw InputError("power ratio needs at least one residual");
    std::size_t n_plus = 0, n_minus = 0;
    double ss_plus = 0.0, ss_minus = 0.0;
    for (double r : residuals) {
        if (r > 0.0) {
            ++n_plus;
            ss_plus += r * r;
        } else if (r < 0.0) {
            ++n_minus;
            ss_minus += r * r;
        }
    }
    const double n = static_cast<double>(residuals.size());
    PowerRatio out;
    out.r_plus = static_cast<double>(n_plus) / n;
    out.r_minus = static_cast<double>(n_minus) / n;
    out.rmse_plus = n_plus ? std::sqrt(ss_plus / static_cast<double>(n_plus)) : 0.0;
    out.rmse_minus = n_minus ? std::sqrt(ss_minus / static_cast<double>(n_minus)) : 0.0;
    // One exponential of the summed logs; a zero base only matters when its
    // exponent is positive (0^0 = 1).
    const double base_plus = out.rmse_plus * out.r_plus, base_minus = out.rmse_minus * out.r_minus;
    if ((base_plus == 0.0 && out.r_minus > 0.0) || (base_minus == 0.0 && out.r_plus > 0.0)) {
        out.psi = 0.0;
    } else {
        double log_psi = 0.0;
        if (out.r_minus > 0.0) log_psi += out.r_minus * std::log(base_plus);
        if (out.r_plus > 0.0) log_psi += out.r_plus * std::log(base_minus);
        out.psi = std::exp(log_psi);
    }
    return out;
}

std::vector<std::size_t> find_elbows(std::span<const double> psi, const ElbowOptions& options) {
    if (psi.size() < 5) throw InputError("elbow detection needs at least 5 grid points");
    const std::size_t k_max = psi.size() - 1;
    // d2[k] belongs to grid index k, k = 1 .. K-2.
    std::vector<double> d2(psi.size(), 0.0);
    std::vector<double> interior;
    for (std::size_t k = 1; k < k_max; ++k) {
        d2[k] = std::abs(psi[k + 1] - 2.0 * psi[k] + psi[k - 1]);
        interior.push_back(d2[k]);
    }
    double scale = 0.0;
    for (double v : psi) scale = std::max(scale, std::abs(v));
    const double threshold = std::max(options.prominence * median(interior), options.noise_floor * scale);

    std::vector<std::size_t> out;
    for (std::size_t k = 1; k < k_max; ++k) {
        const double left = k > 1 ? d2[k - 1] : 0.0;
        const double right = k + 1 < k_max ? d2[k + 1] : 0.0;
        if (d2[k] > threshold && d2[k] > left && d2[k] >= right) out.push_back(k);
    }
    return out;
}

std::vector<double> make_grid(double min, double max, double step) {
    if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step) || !(step > 0.0) || max < min)
        throw InvalidParameter("grid needs min <= max and a positive step");
    const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        double v = min + static_cast<double>(k) * step;
        if (std::abs(v) < 1e-9 * step) v = 0.0;
        grid.push_back(v);
    }
    return grid;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidParameter("bad grid '" + text + "' (expected min:max:step)");
        }
    }
    if (parts.size() != 3) throw InvalidParameter("bad grid '" + text + "' (expected min:max:step)");
    return make_grid(parts[0], parts[1], parts[2]);
}

std::vector<double> default_grid(LossFamily family) {
    switch (family) {
        case LossFamily::linex: return make_grid(-3.0, -0.05, 0.05);
        case LossFamily::pdl: return make_grid(1.0, 60.0, 1.0);
        case LossFamily::squared_error: break;
    }
    throw InvalidParameter("power-ratio sweeps need an asymmetric loss family");
}

PowerRatioCurve sweep(const std::vector<std::string>& region_ids, const Eigen::MatrixXd& fitted,
                      const Eigen::VectorXd& observed, LossFamily family, const std::vector<double>& lambda_grid,
                      const SweepOptions& options) {
    if (family == LossFamily::squared_error) throw InvalidParameter("power-ratio sweeps need linex or pdl");
    if (observed.size() != fitted.cols()) throw InputError("observed vector length does not match the draws");
    if (lambda_grid.empty()) throw InvalidParameter("empty lambda grid");
    for (std::size_t k = 1; k < lambda_grid.size(); ++k)
        if (!(lambda_grid[k] > lambda_grid[k - 1])) throw InvalidParameter("lambda grid must be strictly increasing");
    if (options.enforce_half_line) {
        for (double l : lambda_grid) {
            const bool wrong = family == LossFamily::linex ? l > 0.0 : l < 0.0;
            if (wrong) {
                std::ostringstream msg;
                msg << "lambda " << l << " is outside the "
                    << (family == LossFamily::linex ? "linex (lambda < 0)" : "pdl (lambda > 0)")
                    << " half-line; disable the half-line check to sweep it";
                throw InvalidParameter(msg.str());
            }
        }
    }

    PowerRatioCurve curve;
    curve.family = family;
    std::vector<Eigen::VectorXd> rows;
    for (double lambda : lambda_grid) {
        const LossSpec spec{family, lambda, 1.0};
        try {
            spec.validate();
            const PredictorTable table = predictor_table(region_ids, fitted, spec);
            Eigen::VectorXd pred(fitted.cols());
            for (Eigen::Index i = 0; i < pred.size(); ++i) pred(i) = table.rows[static_cast<std::size_t>(i)].predictor;
            const Eigen::VectorXd resid = pred - observed;
            curve.points.push_back(power_ratio(std::span<const double>(resid.data(), static_cast<std::size_t>(resid.size()))));
            curve.lambda_grid.push_back(lambda);
            rows.push_back(std::move(pred));
        } catch (const InvalidParameter& e) {
            curve.warnings.push_back({lambda, e.what()});
        } catch (const NumericalError& e) {
            curve.warnings.push_back({lambda, e.what()});
        }
    }
    curve.predictors.resize(static_cast<Eigen::Index>(rows.size()), fitted.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) curve.predictors.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();

    curve.elbow_flags.assign(curve.points.size(), false);
    if (curve.points.size() >= 5) {
        std::vector<double> psi;
        for (const auto& p : curve.points) psi.push_back(p.psi);
        curve.elbow_candidates = find_elbows(psi, options.elbows);
        for (auto k : curve.elbow_candidates) curve.elbow_flags[k] = true;
    }
    return curve;
}

PowerRatioCurve sweep(const PosteriorDraws& draws, const Eigen::VectorXd& observed, LossFamily family,
                      const std::vector<double>& lambda_grid, const SweepOptions& options) {
    return sweep(draws.region_ids, draws.fitted, observed, family, lambda_grid, options);
}

}  // namespace carloss
