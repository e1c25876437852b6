#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "carloss/area_model.hpp"
#include "carloss/sampler.hpp"

namespace carloss::testing {

inline std::filesystem::path fixtures_dir() {
    if (const char* env = std::getenv("CARLOSS_FIXTURES")) return env;
    return std::filesystem::path(__FILE__).parent_path() / "fixtures";
}

inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("CARLOSS_DATA")) return env;
    return std::filesystem::path(__FILE__).parent_path().parent_path() / "data";
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("carloss_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<std::string> region_labels(int n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
    return ids;
}

// Random connected graph: a random spanning tree plus extra edges.
inline NeighborGraph random_graph(int n, std::mt19937_64& rng, double extra_edge_prob = 0.15) {
    std::vector<NeighborGraph::Edge> edges;
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> parent(0, i - 1);
        edges.emplace_back(parent(rng), i);
    }
    std::bernoulli_distribution extra(extra_edge_prob);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (extra(rng)) edges.emplace_back(i, j);
    return NeighborGraph::from_edges(n, edges);
}

// rows x cols rook-adjacency lattice.
inline NeighborGraph lattice_graph(int rows, int cols) {
    std::vector<NeighborGraph::Edge> edges;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const int i = r * cols + c;
            if (c + 1 < cols) edges.emplace_back(i, i + 1);
            if (r + 1 < rows) edges.emplace_back(i, i + cols);
        }
    return NeighborGraph::from_edges(rows * cols, edges);
}

// Exact draw from N(mu, tau^2 (I - rho C)^{-1}).
inline VectorXd draw_car(const NeighborGraph& g, const VectorXd& mu, double rho, double tau, std::mt19937_64& rng) {
    const MatrixXd cov = car_covariance(g, {VectorXd(), rho, tau});
    Eigen::LLT<MatrixXd> llt(cov);
    std::normal_distribution<double> normal;
    VectorXd xi(mu.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
    return mu + llt.matrixL() * xi;
}

}  // namespace carloss::testing
