#include "carloss/area_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "carloss/errors.hpp"

namespace carloss {

AreaDataset::AreaDataset(std::vector<std::string> region_ids, VectorXd z, MatrixXd x,
                         std::optional<double> sigma2_meas, std::vector<std::string> covariate_names)
    : region_ids_(std::move(region_ids)),
      covariate_names_(std::move(covariate_names)),
      z_(std::move(z)),
      x_(std::move(x)),
      sigma2_meas_(sigma2_meas) {
    const auto n = static_cast<Eigen::Index>(region_ids_.size());
    if (n < 2) throw InputError("dataset needs at least 2 regions");
    if (z_.size() != n) throw InputError("z length does not match the number of regions");
    if (x_.rows() != n) throw InputError("design matrix row count does not match the number of regions");
    if (x_.cols() < 1) throw InputError("design matrix needs an intercept column");
    if (!z_.allFinite() || !x_.allFinite()) throw InputError("dataset contains missing or non-finite values");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (x_(i, 0) != 1.0) {
            std::ostringstream msg;
            msg << "intercept column is not identically 1 (row " << i << ")";
            throw InputError(msg.str());
        }
    }
    std::set<std::string> seen;
    for (const auto& id : region_ids_) {
        if (!seen.insert(id).second) throw InputError("duplicate region id '" + id + "'");
    }
    if (sigma2_meas_ && !(*sigma2_meas_ >= 0.0 && std::isfinite(*sigma2_meas_)))
        throw InputError("measurement-error variance must be a nonnegative finite number");
    if (covariate_names_.empty()) {
        for (Eigen::Index j = 1; j < x_.cols(); ++j) covariate_names_.push_back("x" + std::to_string(j));
    } else if (static_cast<Eigen::Index>(covariate_names_.size()) != x_.cols() - 1) {
        throw InputError("covariate name count does not match the design matrix");
    }
}

AreaDataset AreaDataset::intercept_only(std::vector<std::string> region_ids, VectorXd z,
                                        std::optional<double> sigma2_meas) {
    MatrixXd x = MatrixXd::Ones(z.size(), 1);
    return AreaDataset(std::move(region_ids), std::move(z), std::move(x), sigma2_meas);
}

NeighborGraph::NeighborGraph(MatrixXd c, std::vector<Edge> edges) : c_(std::move(c)), edges_(std::move(edges)) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(c_, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("eigen decomposition of the adjacency matrix failed");
    eigen_min_ = solver.eigenvalues().minCoeff();
    eigen_max_ = solver.eigenvalues().maxCoeff();
    constexpr double kZero = 1e-12;
    rho_bounds_.lower = eigen_min_ < -kZero ? std::max(-1.0, 1.0 / eigen_min_) : -1.0;
    rho_bounds_.upper = eigen_max_ > kZero ? std::min(1.0, 1.0 / eigen_max_) : 1.0;
}

NeighborGraph NeighborGraph::from_edges(int n, const std::vector<Edge>& edges, GraphOptions options) {
    if (n < 1) throw InputError("graph needs at least one region");
    MatrixXd c = MatrixXd::Zero(n, n);
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw InputError("edge references a region index out of range");
        if (a == b) throw InputError("self-loops are not allowed in the adjacency");
        c(a, b) = 1.0;
        c(b, a) = 1.0;
    }
    return from_matrix(c, options);
}

NeighborGraph NeighborGraph::from_matrix(const MatrixXd& c, GraphOptions options) {
    if (c.rows() != c.cols() || c.rows() < 1) throw InputError("adjacency matrix must be square and nonempty");
    const int n = static_cast<int>(c.rows());
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        if (c(i, i) != 0.0) throw InputError("adjacency diagonal must be zero");
        bool has_neighbor = false;
        for (int j = 0; j < n; ++j) {
            const double v = c(i, j);
            if (v != 0.0 && v != 1.0) throw InputError("adjacency must be binary");
            if (v != c(j, i)) throw InputError("adjacency must be symmetric");
            if (v == 1.0) {
                has_neighbor = true;
                if (i < j) edges.emplace_back(i, j);
            }
        }
        if (!has_neighbor && !options.allow_isolated)
            throw InputError("region index " + std::to_string(i) + " has no neighbors");
    }
    return NeighborGraph(c, std::move(edges));
}

void validate_params(const NeighborGraph& graph, double rho, double tau) {
    const auto& bounds = graph.rho_bounds();
    if (!std::isfinite(rho) || !bounds.contains(rho)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "rho = " << rho << " outside (" << bounds.lower << ", " << bounds.upper << ")";
        throw InvalidParameter(msg.str());
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("tau must be positive and finite");
}

namespace {

MatrixXd i_minus_rho_c(const NeighborGraph& graph, double rho) {
    MatrixXd a = -rho * graph.c();
    a.diagonal().array() += 1.0;
    return a;
}

}  // namespace

MatrixXd build_precision(const NeighborGraph& graph, const CarParams& params) {
    validate_params(graph, params.rho, params.tau);
    MatrixXd q = i_minus_rho_c(graph, params.rho) / (params.tau * params.tau);
    Eigen::LLT<MatrixXd> llt(q);
    if (llt.info() != Eigen::Success) throw NumericalError("CAR precision is not positive definite");
    return q;
}

MatrixXd car_covariance(const NeighborGraph& graph, const CarParams& params) {
    validate_params(graph, params.rho, params.tau);
    Eigen::LLT<MatrixXd> llt(i_minus_rho_c(graph, params.rho));
    if (llt.info() != Eigen::Success) throw NumericalError("I - rho C is not positive definite");
    MatrixXd cov = llt.solve(MatrixXd::Identity(graph.n(), graph.n()));
    return params.tau * params.tau * cov;
}

std::optional<double> car_log_det(const NeighborGraph& graph, double rho) {
    Eigen::LLT<MatrixXd> llt(i_minus_rho_c(graph, rho));
    if (llt.info() != Eigen::Success) return std::nullopt;
    const auto diag = llt.matrixLLT().diagonal().array();
    if ((diag <= 0.0).any()) return std::nullopt;
    return 2.0 * diag.log().sum();
}

VectorXd mean_vector(const AreaDataset& dataset, const VectorXd& beta) {
    if (beta.size() != dataset.num_coefficients()) {
        std::ostringstream msg;
        msg << "beta has length " << beta.size() << ", expected " << dataset.num_coefficients();
        throw InputError(msg.str());
    }
    return dataset.x() * beta;
}

VectorXd conditional_mean(const NeighborGraph& graph, const VectorXd& mu, const VectorXd& y, double rho) {
    return mu + rho * (graph.c() * (y - mu));
}

VectorXd fitted_values(const AreaDataset& dataset, const NeighborGraph& graph, const CarParams& params) {
    if (graph.n() != dataset.n()) throw InputError("graph and dataset sizes differ");
    validate_params(graph, params.rho, params.tau);
    return conditional_mean(graph, mean_vector(dataset, params.beta), dataset.z(), params.rho);
}

}  // namespace carloss
