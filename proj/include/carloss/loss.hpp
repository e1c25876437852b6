#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace carloss {

struct PosteriorDraws;

enum class LossFamily { squared_error, linex, pdl };

std::string to_string(LossFamily family);
LossFamily parse_loss_family(const std::string& name);

struct LossSpec {
    LossFamily family = LossFamily::squared_error;
    // linex: nonzero; pdl: any real; ignored for squared error.
    double lambda = 0.0;
    // LINEX scale. Rescales loss values, never moves the minimizer.
    double gamma_scale = 1.0;

    static LossSpec squared_error() { return {}; }
    static LossSpec linex(double lambda, double gamma_scale = 1.0) { return {LossFamily::linex, lambda, gamma_scale}; }
    static LossSpec pdl(double lambda) { return {LossFamily::pdl, lambda, 1.0}; }

    // Throws InvalidParameter (linex with lambda = 0, gamma <= 0).
    void validate() const;
    // "squared_error", "linex(-0.6)", "pdl(38)".
    std::string label() const;
};

// Parses "squared_error", "linex:<lambda>[:<gamma>]", "pdl:<lambda>".
LossSpec parse_loss_spec(const std::string& text);

// gamma [exp(lambda delta) - lambda delta - 1], delta = yhat - y.
double linex_loss(double delta, double lambda, double gamma_scale = 1.0);

// Power divergence loss of predicting y by yhat; both must be positive.
double pdl_loss(double y, double yhat, double lambda);

// Loss of predicting y by yhat under spec.
double loss_value(double y, double yhat, const LossSpec& spec);

// (1/M) sum_j L(draws_j, yhat), accumulated in extended precision.
double expected_loss(std::span<const double> draws, double yhat, const LossSpec& spec);

// Exact minimizer of expected_loss over the same draws. Throws DomainError
// for nonpositive draws under pdl, NumericalError on overflow.
double optimal_predictor(std::span<const double> draws, const LossSpec& spec);

// Empirical CDF of the draws at the predictor.
double quantile_match(std::span<const double> draws, double predictor);

// log((1/M) sum_j exp(a_j)), max-shifted.
double log_mean_exp(std::span<const double> a);

struct PredictorRow {
    std::string region_id;
    double predictor = 0.0;
    double posterior_mean = 0.0;
    // Standard deviation of the fitted draws (divisor M).
    double sd = 0.0;
    // sqrt(sd^2 + (predictor - posterior_mean)^2)
    double rmspe = 0.0;
    double matched_quantile = 0.0;
};

struct PredictorTable {
    LossSpec spec;
    std::vector<PredictorRow> rows;

    std::vector<double> predictors() const;
};

// Column i of fitted holds the M draws of region i.
PredictorTable predictor_table(const std::vector<std::string>& region_ids, const Eigen::MatrixXd& fitted,
                               const LossSpec& spec);
PredictorTable predictor_table(const PosteriorDraws& draws, const LossSpec& spec);

}  // namespace carloss
