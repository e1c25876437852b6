#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carloss/loss.hpp"

namespace carloss {

struct PosteriorDraws;

struct PowerRatio {
    double psi = 1.0;
    double r_plus = 0.0;
    double r_minus = 0.0;
    double rmse_plus = 0.0;
    double rmse_minus = 0.0;
};

// Psi = (RMSE+ R+)^{R-} (RMSE- R-)^{R+} over residuals predictor - observed.
// Exactly-zero residuals belong to neither class, an empty class has RMSE 0
// and 0^0 = 1.
PowerRatio power_ratio(std::span<const double> residuals);

struct ElbowOptions {
    // A local maximum of |second difference| is flagged when it exceeds
    // prominence * median |second difference| ...
    double prominence = 1.5;
    // ... and this fraction of max |psi| (suppresses rounding noise).
    double noise_floor = 1e-9;
};

// Interior grid indices k where |psi[k+1] - 2 psi[k] + psi[k-1]| is a local
// maximum above the threshold. Needs at least 5 points.
std::vector<std::size_t> find_elbows(std::span<const double> psi, const ElbowOptions& options = {});

struct SweepWarning {
    double lambda = 0.0;
    std::string message;
};

struct PowerRatioCurve {
    LossFamily family = LossFamily::linex;
    std::vector<double> lambda_grid;
    std::vector<PowerRatio> points;
    // K x n optimal predictors, row k for lambda_grid[k].
    Eigen::MatrixXd predictors;
    std::vector<bool> elbow_flags;
    std::vector<std::size_t> elbow_candidates;
    // Grid values skipped with the reason.
    std::vector<SweepWarning> warnings;
};

struct SweepOptions {
    // Require linex lambda < 0 and pdl lambda > 0 (underestimation costlier).
    bool enforce_half_line = true;
    ElbowOptions elbows;
};

// Evenly spaced grid min, min + step, ..., <= max. Values within 1e-9 step of
// zero are snapped to zero.
std::vector<double> make_grid(double min, double max, double step);
// "min:max:step"
std::vector<double> parse_grid(const std::string& text);
std::vector<double> default_grid(LossFamily family);

// Optimal predictors for every grid lambda from the same draws, the power
// ratio of predictor - observed, and elbow flags.
PowerRatioCurve sweep(const std::vector<std::string>& region_ids, const Eigen::MatrixXd& fitted,
                      const Eigen::VectorXd& observed, LossFamily family, const std::vector<double>& lambda_grid,
                      const SweepOptions& options = {});
PowerRatioCurve sweep(const PosteriorDraws& draws, const Eigen::VectorXd& observed, LossFamily family,
                      const std::vector<double>& lambda_grid, const SweepOptions& options = {});

}  // namespace carloss
