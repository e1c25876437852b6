#include "carloss/risk.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "carloss/errors.hpp"
#include "carloss/sampler.hpp"
#include "carloss/stats.hpp"

namespace carloss {

double relative_risk(std::span<const double> draws, double yhat, const LossSpec& true_spec) {
    const double opt = optimal_predictor(draws, true_spec);
    const double risk_opt = expected_loss(draws, opt, true_spec);
    if (!(risk_opt > 0.0)) throw UndefinedRatioError("optimal risk is zero (degenerate posterior); relative risk undefined");
    const double risk = expected_loss(draws, yhat, true_spec);
    return (risk - risk_opt) / risk_opt;
}

RiskMatrix risk_matrix(const std::vector<std::string>& region_ids, const Eigen::MatrixXd& fitted,
                       const std::vector<LabeledPredictor>& predictors, const std::vector<LossSpec>& true_losses) {
    if (predictors.empty() || true_losses.empty()) throw InputError("risk matrix needs predictors and true losses");
    const auto n = static_cast<std::size_t>(fitted.cols());
    if (region_ids.size() != n) throw InputError("region count does not match the fitted draws");
    for (const auto& p : predictors)
        if (p.values.size() != n) throw InputError("predictor '" + p.label + "' has the wrong number of regions");

    RiskMatrix m;
    m.region_ids = region_ids;
    m.true_losses = true_losses;
    for (const auto& p : predictors) m.predictor_labels.push_back(p.label);
    m.rr.assign(true_losses.size(), std::vector<std::vector<double>>(predictors.size(), std::vector<double>(n)));
    m.iqr.assign(true_losses.size(), std::vector<double>(predictors.size()));
    m.median_rr = m.iqr;

    for (std::size_t t = 0; t < true_losses.size(); ++t) {
        const LossSpec& spec = true_losses[t];
        spec.validate();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd col = fitted.col(static_cast<Eigen::Index>(i));
            std::span<const double> draws(col.data(), static_cast<std::size_t>(col.size()));
            try {
                const double opt = optimal_predictor(draws, spec);
                const double risk_opt = expected_loss(draws, opt, spec);
                if (!(risk_opt > 0.0)) throw UndefinedRatioError("optimal risk is zero (degenerate posterior)");
                for (std::size_t p = 0; p < predictors.size(); ++p) {
                    const double risk = expected_loss(draws, predictors[p].values[i], spec);
                    m.rr[t][p][i] = (risk - risk_opt) / risk_opt;
                }
            } catch (const Error& e) {
                std::ostringstream msg;
                msg << "true loss " << spec.label() << ", region '" << region_ids[i] << "': " << e.what();
                if (dynamic_cast<const DomainError*>(&e)) throw DomainError(msg.str());
                if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(msg.str());
                throw InputError(msg.str());
            }
        }
        for (std::size_t p = 0; p < predictors.size(); ++p) {
            m.iqr[t][p] = interquartile_range(m.rr[t][p]);
            m.median_rr[t][p] = median(m.rr[t][p]);
        }
    }
    return m;
}

RiskMatrix risk_matrix(const PosteriorDraws& draws, const std::vector<LabeledPredictor>& predictors,
                       const std::vector<LossSpec>& true_losses) {
    return risk_matrix(draws.region_ids, draws.fitted, predictors, true_losses);
}

std::vector<RiskSummaryRow> summarize(const RiskMatrix& matrix) {
    if (matrix.true_losses.empty() || matrix.predictor_labels.empty()) throw InputError("empty risk matrix");
    std::vector<RiskSummaryRow> out;
    const auto& labels = matrix.predictor_labels;
    for (std::size_t t = 0; t < matrix.true_losses.size(); ++t) {
        auto ranked = [&](const std::vector<double>& key) {
            std::vector<std::size_t> idx(labels.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (key[a] != key[b]) return key[a] < key[b];
                return labels[a] < labels[b];
            });
            std::vector<std::string> names;
            for (auto k : idx) names.push_back(labels[k]);
            return names;
        };
        out.push_back({matrix.true_losses[t], ranked(matrix.iqr[t]), ranked(matrix.median_rr[t])});
    }
    return out;
}

}  // namespace carloss
