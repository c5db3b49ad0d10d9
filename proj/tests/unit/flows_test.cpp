#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hypolab/flows.hpp"

using namespace hypolab;

TEST_CASE("first variation matches a bumped trajectory") {
    ModelSpec model = zoo("heat_mult");
    TimeGrid grid(0.5, 500);
    BrownianPath path = sample_brownian(20240814, 10, grid, model.m());
    SolutionPath X = solve_mild(model, path);
    FlowBundle bundle = solve_first_variation(model, X, path);

    REQUIRE(static_cast<int>(bundle.Y.size()) == grid.steps + 1);
    CHECK((bundle.Y.front() - Mat::Identity(model.n(), model.n())).norm() == 0.0);

    const double eps = 1e-5;
    GaussianStream dirs(7, 0);
    for (int trial = 0; trial < 3; ++trial) {
        Vec h(model.n());
        for (int i = 0; i < model.n(); ++i) h[i] = dirs.normal();
        h /= h.norm();
        ModelSpec bumped = model;
        bumped.initial_x = model.initial_x + eps * h;
        SolutionPath Xb = solve_mild(bumped, path);
        Vec fd = (Xb.at(grid.steps) - X.at(grid.steps)) / eps;
        Vec lin = bundle.Y.back() * h;
        CHECK((lin - fd).norm() / lin.norm() <= 5e-3);
    }

    // V is the part of Y beyond the semigroup.
    for (int j : {0, grid.steps / 2, grid.steps}) {
        Mat expected = bundle.Y[static_cast<std::size_t>(j)] - model.sg.matrix(grid.node(j));
        CHECK((bundle.V[static_cast<std::size_t>(j)] - expected).norm() <= 1e-12);
    }
}

TEST_CASE("shift-chain right inverse has an exact residual profile") {
    // With a nilpotent drift Jacobian L (L^3 = 0) and constant diffusion the
    // forward and inverse factors are (I + L dt) and (I - L dt), so
    // P_j R_j - I = -j dt^2 L^2 and the residual peaks at T dt exactly.
    ModelSpec model = zoo("hypo3");
    TimeGrid grid(1.0, 100);
    BrownianPath path = sample_brownian(5, 0, grid, model.m());
    SolutionPath X = solve_mild(model, path);
    FlowBundle bundle = solve_flows(model, X, path, Formulation::conjugated);

    std::vector<double> q = residual_q(bundle);
    REQUIRE(static_cast<int>(q.size()) == grid.steps + 1);
    double max_q = *std::max_element(q.begin(), q.end());
    CHECK(std::abs(max_q - grid.horizon * grid.dt) <= 1e-12);

    // The profile is linear in the node index.
    CHECK(std::abs(q[50] - 50.0 * grid.dt * grid.dt) <= 1e-13);

    // Halving dt halves the residual exactly.
    TimeGrid fine_grid(1.0, 200);
    BrownianPath fine = sample_brownian(5, 0, fine_grid, model.m());
    SolutionPath Xf = solve_mild(model, fine);
    FlowBundle bf = solve_flows(model, Xf, fine, Formulation::conjugated);
    std::vector<double> qf = residual_q(bf);
    double max_qf = *std::max_element(qf.begin(), qf.end());
    CHECK(max_q / max_qf == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("conjugated and direct formulations agree to rounding") {
    ModelSpec model = zoo("heat_mult");
    TimeGrid grid(0.5, 250);
    BrownianPath path = sample_brownian(20240814, 11, grid, model.m());
    SolutionPath X = solve_mild(model, path);

    FlowBundle conj = solve_flows(model, X, path, Formulation::conjugated);
    FlowBundle direct = solve_flows(model, X, path, Formulation::direct);

    CHECK(conj.p_valid_nodes == grid.steps + 1);
    for (int j : {1, grid.steps / 2, grid.steps}) {
        const Mat& a = conj.Z[static_cast<std::size_t>(j)];
        const Mat& b = direct.Z[static_cast<std::size_t>(j)];
        CHECK((a - b).norm() / b.norm() <= 1e-10);
    }
}

TEST_CASE("range residual stays at discretization size") {
    ModelSpec model = zoo("heat_mult");
    TimeGrid grid(0.5, 250);
    BrownianPath path = sample_brownian(20240814, 12, grid, model.m());
    SolutionPath X = solve_mild(model, path);
    FlowBundle bundle = solve_flows(model, X, path, Formulation::conjugated);

    Vec probe = Vec::Ones(model.n()) / std::sqrt(static_cast<double>(model.n()));
    CHECK(range_residual(model, bundle, probe) <= 1e-2);
}

TEST_CASE("stiff spectrum: conjugated flow refuses, direct flow degrades gracefully") {
    ModelSpec model;
    model.name = "stiff";
    model.cfg = TruncationConfig::unit(2, 1);
    Vec spectrum(2);
    spectrum << -50.0, -1.0;
    model.sg = Semigroup::diagonal(spectrum);
    model.drift = VectorField::zero(2);
    model.diffusion.columns.push_back(VectorField::constant(Vec::Ones(2)));
    model.initial_x = Vec::Ones(2);
    model.validate();

    TimeGrid grid(1.0, 100);  // |lambda| T = 50 > cap 40
    BrownianPath path = sample_brownian(6, 0, grid, 1);
    SolutionPath X = solve_mild(model, path);

    CHECK_THROWS_AS(solve_flows(model, X, path, Formulation::conjugated), OverflowCapError);

    FlowBundle direct = solve_flows(model, X, path, Formulation::direct);
    CHECK(static_cast<int>(direct.Z.size()) == grid.steps + 1);
    CHECK(direct.p_valid_nodes < grid.steps + 1);
    CHECK(direct.p_valid_nodes > 0);
    CHECK(static_cast<int>(residual_q(direct).size()) == direct.p_valid_nodes);

    // Z itself stays finite and usable over the whole horizon.
    CHECK(all_finite(direct.Z.back()));
}
