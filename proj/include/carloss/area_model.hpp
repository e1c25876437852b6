#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace carloss {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Area-level observations: one row per region, z observed, x the design
// matrix with a leading intercept column.
class AreaDataset {
public:
    // Throws InputError when an invariant is violated.
    AreaDataset(std::vector<std::string> region_ids, VectorXd z, MatrixXd x,
                std::optional<double> sigma2_meas = std::nullopt,
                std::vector<std::string> covariate_names = {});

    // Intercept-only design.
    static AreaDataset intercept_only(std::vector<std::string> region_ids, VectorXd z,
                                      std::optional<double> sigma2_meas = std::nullopt);

    Eigen::Index n() const { return z_.size(); }
    // p + 1, the number of regression coefficients.
    Eigen::Index num_coefficients() const { return x_.cols(); }

    const std::vector<std::string>& region_ids() const { return region_ids_; }
    const std::vector<std::string>& covariate_names() const { return covariate_names_; }
    const VectorXd& z() const { return z_; }
    const MatrixXd& x() const { return x_; }
    const std::optional<double>& sigma2_meas() const { return sigma2_meas_; }
    bool has_measurement_error() const { return sigma2_meas_.has_value(); }

private:
    std::vector<std::string> region_ids_;
    std::vector<std::string> covariate_names_;
    VectorXd z_;
    MatrixXd x_;
    std::optional<double> sigma2_meas_;
};

// Open interval of admissible rho values.
struct RhoBounds {
    double lower = -1.0;
    double upper = 1.0;

    bool contains(double rho) const { return rho > lower && rho < upper; }
};

struct GraphOptions {
    // Test configurations only; a proper model needs every region to have a
    // neighbor.
    bool allow_isolated = false;
};

// Binary symmetric adjacency with zero diagonal.
class NeighborGraph {
public:
    using Edge = std::pair<int, int>;

    static NeighborGraph from_edges(int n, const std::vector<Edge>& edges, GraphOptions options = {});
    static NeighborGraph from_matrix(const MatrixXd& c, GraphOptions options = {});

    int n() const { return static_cast<int>(c_.rows()); }
    // Sorted, each pair stored once with first < second.
    const std::vector<Edge>& edges() const { return edges_; }
    const MatrixXd& c() const { return c_; }
    double eigen_min() const { return eigen_min_; }
    double eigen_max() const { return eigen_max_; }
    // (1/e_min, 1/e_max) intersected with (-1, 1).
    const RhoBounds& rho_bounds() const { return rho_bounds_; }

private:
    NeighborGraph(MatrixXd c, std::vector<Edge> edges);

    MatrixXd c_;
    std::vector<Edge> edges_;
    double eigen_min_ = 0.0;
    double eigen_max_ = 0.0;
    RhoBounds rho_bounds_;
};

struct CarParams {
    VectorXd beta;
    double rho = 0.0;
    double tau = 1.0;
};

// Throws InvalidParameter unless rho is inside the graph's bounds and tau > 0.
void validate_params(const NeighborGraph& graph, double rho, double tau);

// Q = (I - rho C) / tau^2. Throws InvalidParameter for rho out of bounds and
// NumericalError when Q does not factorize.
MatrixXd build_precision(const NeighborGraph& graph, const CarParams& params);

// tau^2 (I - rho C)^{-1}.
MatrixXd car_covariance(const NeighborGraph& graph, const CarParams& params);

// log |I - rho C| through a Cholesky factorization; std::nullopt when the
// matrix is not positive definite.
std::optional<double> car_log_det(const NeighborGraph& graph, double rho);

// mu = X beta.
VectorXd mean_vector(const AreaDataset& dataset, const VectorXd& beta);

// mu + rho C (y - mu).
VectorXd conditional_mean(const NeighborGraph& graph, const VectorXd& mu, const VectorXd& y, double rho);

// Fitted values of the no-measurement-error variant, with z standing in for y.
VectorXd fitted_values(const AreaDataset& dataset, const NeighborGraph& graph, const CarParams& params);

}  // namespace carloss
