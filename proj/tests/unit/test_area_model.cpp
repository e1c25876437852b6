#include <doctest.h>

#include <cmath>

#include "carloss/area_model.hpp"
#include "carloss/errors.hpp"
#include "test_util.hpp"

using namespace carloss;

namespace {

NeighborGraph pair_graph() { return NeighborGraph::from_edges(2, {{0, 1}}); }

AreaDataset pair_dataset(double z0, double z1, double x0, double x1) {
    MatrixXd x(2, 2);
    x << 1.0, x0, 1.0, x1;
    return AreaDataset({"A", "B"}, (VectorXd(2) << z0, z1).finished(), x);
}

}  // namespace

TEST_CASE("rho bounds of a single edge are (-1, 1)") {
    const auto g = pair_graph();
    CHECK(g.rho_bounds().lower == doctest::Approx(-1.0));
    CHECK(g.rho_bounds().upper == doctest::Approx(1.0));
    CHECK(g.eigen_min() == doctest::Approx(-1.0));
    CHECK(g.eigen_max() == doctest::Approx(1.0));
}

TEST_CASE("build_precision with rho = 0 is the identity scaled by 1/tau^2") {
    const auto g = pair_graph();
    const MatrixXd q = build_precision(g, {VectorXd(), 0.0, 1.0});
    CHECK(q.isApprox(MatrixXd::Identity(2, 2)));
    const MatrixXd q2 = build_precision(g, {VectorXd(), 0.0, 2.0});
    CHECK(q2.isApprox(0.25 * MatrixXd::Identity(2, 2)));
}

TEST_CASE("covariance at rho = 0.5 matches the hand 2x2 inverse") {
    // (I - 0.5 C)^{-1} = 1/(1 - 0.25) [[1, 0.5], [0.5, 1]]
    MatrixXd expected(2, 2);
    expected << 1.0, 0.5, 0.5, 1.0;
    expected *= 4.0 / 3.0;
    const auto g = pair_graph();
    const MatrixXd q = build_precision(g, {VectorXd(), 0.5, 1.0});
    CHECK((q.inverse() - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((car_covariance(g, {VectorXd(), 0.5, 1.0}) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rho outside the bounds is an invalid parameter") {
    const auto g = pair_graph();
    CHECK_THROWS_AS(build_precision(g, {VectorXd(), 1.0, 1.0}), InvalidParameter);
    CHECK_THROWS_AS(build_precision(g, {VectorXd(), -1.5, 1.0}), InvalidParameter);
    CHECK_THROWS_AS(build_precision(g, {VectorXd(), 0.2, 0.0}), InvalidParameter);
    CHECK_THROWS_AS(build_precision(g, {VectorXd(), std::nan(""), 1.0}), InvalidParameter);
}

TEST_CASE("random graphs: inside the bounds factorizes, just outside errors") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> size(2, 25);
        const auto g = testing::random_graph(size(rng), rng);
        const auto b = g.rho_bounds();
        REQUIRE(b.contains(0.0));
        std::uniform_real_distribution<double> u(b.lower, b.upper);
        const double rho = u(rng);
        const MatrixXd q = build_precision(g, {VectorXd(), rho, 0.7});
        CHECK(Eigen::LLT<MatrixXd>(q).info() == Eigen::Success);

        const double above = b.upper + 1e-9;
        const double below = b.lower - 1e-9;
        CHECK_THROWS_AS(build_precision(g, {VectorXd(), above, 0.7}), InvalidParameter);
        CHECK_THROWS_AS(build_precision(g, {VectorXd(), below, 0.7}), InvalidParameter);
        // Independent check: past 1/e_max the matrix I - rho C is indefinite.
        if (b.upper < 1.0) CHECK_FALSE(car_log_det(g, b.upper * (1.0 + 1e-6)).has_value());
    }
}

TEST_CASE("precision times covariance is the identity") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> size(2, 25);
        const auto g = testing::random_graph(size(rng), rng);
        std::uniform_real_distribution<double> u(g.rho_bounds().lower, g.rho_bounds().upper);
        const CarParams p{VectorXd(), u(rng), 0.3 + trial * 0.01};
        const MatrixXd prod = build_precision(g, p) * car_covariance(g, p);
        CHECK((prod - MatrixXd::Identity(g.n(), g.n())).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("car_log_det agrees with the eigenvalue product") {
    std::mt19937_64 rng(9);
    const auto g = testing::random_graph(12, rng);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.c());
    for (double rho : {g.rho_bounds().lower * 0.9, 0.0, g.rho_bounds().upper * 0.5, g.rho_bounds().upper * 0.99}) {
        const double expected = (1.0 - rho * es.eigenvalues().array()).log().sum();
        CHECK(*car_log_det(g, rho) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("mean_vector") {
    const auto d = pair_dataset(0.0, 0.0, 1.0, 2.0);
    CHECK(mean_vector(d, (VectorXd(2) << 1.0, 2.0).finished()).isApprox((VectorXd(2) << 3.0, 5.0).finished()));
    CHECK(mean_vector(d, VectorXd::Zero(2)).isZero());
    const VectorXd c = mean_vector(d, (VectorXd(2) << 4.5, 0.0).finished());
    CHECK(c(0) == 4.5);
    CHECK(c(1) == 4.5);
    CHECK_THROWS_AS(mean_vector(d, VectorXd::Zero(3)), InputError);
}

TEST_CASE("fitted_values") {
    const auto g = pair_graph();
    MatrixXd x = MatrixXd::Ones(2, 1);
    const AreaDataset d({"A", "B"}, (VectorXd(2) << 2.0, 4.0).finished(), x);

    SUBCASE("hand example: phi = rho * neighbor residual") {
        const VectorXd f = fitted_values(d, g, {VectorXd::Zero(1), 0.5, 1.0});
        CHECK(f(0) == doctest::Approx(2.0));
        CHECK(f(1) == doctest::Approx(1.0));
    }
    SUBCASE("rho = 0 gives the regression mean") {
        const VectorXd f = fitted_values(d, g, {VectorXd::Constant(1, 1.5), 0.0, 1.0});
        CHECK(f.isApprox(VectorXd::Constant(2, 1.5)));
    }
    SUBCASE("zero residuals kill the spatial trend") {
        const AreaDataset flat({"A", "B"}, VectorXd::Constant(2, 3.0), x);
        for (double rho : {-0.9, -0.3, 0.4, 0.95}) {
            const VectorXd f = fitted_values(flat, g, {VectorXd::Constant(1, 3.0), rho, 1.0});
            CHECK(f.isApprox(VectorXd::Constant(2, 3.0)));
        }
    }
}

TEST_CASE("fitted_values is linear in z and reduces to mu without edges") {
    std::mt19937_64 rng(3);
    const auto g = testing::random_graph(8, rng);
    std::normal_distribution<double> normal;
    MatrixXd x(8, 2);
    VectorXd z1(8), z2(8);
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = normal(rng);
        z1(i) = normal(rng);
        z2(i) = normal(rng);
    }
    const CarParams p{(VectorXd(2) << 0.3, -1.2).finished(), 0.8 * g.rho_bounds().upper, 1.0};
    const auto ids = testing::region_labels(8);
    const VectorXd f1 = fitted_values(AreaDataset(ids, z1, x), g, p);
    const VectorXd f2 = fitted_values(AreaDataset(ids, z2, x), g, p);
    const VectorXd f12 = fitted_values(AreaDataset(ids, 2.0 * z1 - 3.0 * z2, x), g, p);
    // affine in z: f(a z1 + b z2) = a f(z1) + b f(z2) + (1 - a - b) f(0)
    const VectorXd f0 = fitted_values(AreaDataset(ids, VectorXd::Zero(8), x), g, p);
    CHECK((f12 - (2.0 * f1 - 3.0 * f2 + 2.0 * f0)).cwiseAbs().maxCoeff() < 1e-12);

    const VectorXd mu = mean_vector(AreaDataset(ids, z1, x), p.beta);

    const auto empty = NeighborGraph::from_matrix(MatrixXd::Zero(8, 8), {.allow_isolated = true});
    CHECK(fitted_values(AreaDataset(ids, z1, x), empty, p).isApprox(mu));
}

TEST_CASE("dataset invariants") {
    MatrixXd x = MatrixXd::Ones(2, 1);
    CHECK_THROWS_AS(AreaDataset({"A"}, VectorXd::Ones(1), MatrixXd::Ones(1, 1)), InputError);
    CHECK_THROWS_AS(AreaDataset({"A", "A"}, VectorXd::Ones(2), x), InputError);
    MatrixXd bad = x;
    bad(1, 0) = 2.0;
    CHECK_THROWS_AS(AreaDataset({"A", "B"}, VectorXd::Ones(2), bad), InputError);
    VectorXd nan_z = VectorXd::Ones(2);
    nan_z(0) = std::nan("");
    CHECK_THROWS_AS(AreaDataset({"A", "B"}, nan_z, x), InputError);
    CHECK_THROWS_AS(AreaDataset({"A", "B"}, VectorXd::Ones(2), x, -1.0), InputError);
    CHECK_NOTHROW(AreaDataset({"A", "B"}, VectorXd::Ones(2), x, 0.5));
}

TEST_CASE("graph invariants") {
    CHECK_THROWS_AS(NeighborGraph::from_edges(3, {{0, 1}}), InputError);  // region 2 isolated
    CHECK_THROWS_AS(NeighborGraph::from_edges(2, {{0, 0}}), InputError);
    CHECK_THROWS_AS(NeighborGraph::from_edges(2, {{0, 2}}), InputError);
    MatrixXd asym = MatrixXd::Zero(2, 2);
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS(NeighborGraph::from_matrix(asym), InputError);
    MatrixXd weighted = MatrixXd::Zero(2, 2);
    weighted(0, 1) = weighted(1, 0) = 0.5;
    CHECK_THROWS_AS(NeighborGraph::from_matrix(weighted), InputError);

    const auto g = NeighborGraph::from_edges(3, {{1, 0}, {1, 2}, {0, 1}});
    REQUIRE(g.edges().size() == 2);
    CHECK(g.edges()[0] == NeighborGraph::Edge{0, 1});
    CHECK(g.edges()[1] == NeighborGraph::Edge{1, 2});
    // path graph on 3 nodes: eigenvalues +-sqrt(2), 0
    CHECK(g.rho_bounds().upper == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(g.rho_bounds().lower == doctest::Approx(-1.0 / std::sqrt(2.0)));
}
