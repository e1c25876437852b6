#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carloss/loss.hpp"

namespace carloss {

struct PosteriorDraws;

// (Risk(yhat) - Risk(opt)) / Risk(opt) with both risks evaluated by
// expected_loss on the same draws. Throws UndefinedRatioError when the
// optimal risk is zero.
double relative_risk(std::span<const double> draws, double yhat, const LossSpec& true_spec);

struct LabeledPredictor {
    std::string label;
    std::vector<double> values;  // one per region
};

struct RiskMatrix {
    std::vector<std::string> region_ids;
    std::vector<LossSpec> true_losses;
    std::vector<std::string> predictor_labels;
    // rr[t][p][i]: true loss t, predictor p, region i.
    std::vector<std::vector<std::vector<double>>> rr;
    // iqr[t][p] and median_rr[t][p] across regions.
    std::vector<std::vector<double>> iqr;
    std::vector<std::vector<double>> median_rr;
};

RiskMatrix risk_matrix(const std::vector<std::string>& region_ids, const Eigen::MatrixXd& fitted,
                       const std::vector<LabeledPredictor>& predictors, const std::vector<LossSpec>& true_losses);
RiskMatrix risk_matrix(const PosteriorDraws& draws, const std::vector<LabeledPredictor>& predictors,
                       const std::vector<LossSpec>& true_losses);

struct RiskSummaryRow {
    LossSpec true_loss;
    // Predictor labels, best first; ties broken by label.
    std::vector<std::string> by_iqr;
    std::vector<std::string> by_median;
};

std::vector<RiskSummaryRow> summarize(const RiskMatrix& matrix);

}  // namespace carloss
