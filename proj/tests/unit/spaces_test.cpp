#include <cmath>

#include "doctest.h"
#include "hypolab/errors.hpp"
#include "hypolab/rng.hpp"
#include "hypolab/spaces.hpp"

using namespace hypolab;

TEST_CASE("weighted norms match hand values") {
    TruncationConfig cfg;
    cfg.n = 2;
    cfg.m = 2;
    cfg.e_weights = Vec(2);
    cfg.e_weights << 1.0, 2.0;
    cfg.h_weights = Vec(2);
    cfg.h_weights << 1.0, 2.0;
    cfg.validate();

    Vec v(2);
    v << 1.0, 1.0;
    // |v|_E^2 = 1^2 + (2*1)^2 = 5
    CHECK(e_norm(cfg, v) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    CHECK(h_norm(cfg, v) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));

    // ||I||^2 = |e_1|_E^2 / h_1^2 + |e_2|_E^2 / h_2^2 = 1/1 + 4/4 = 2
    CHECK(hs_norm(cfg, Mat::Identity(2, 2)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    // W M W^{-1} for M = [[0,1],[0,0]] has the single entry w_1 / w_2 = 1/2.
    Mat M = Mat::Zero(2, 2);
    M(0, 1) = 1.0;
    CHECK(operator_norm_e(cfg, M) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("truncation config validation") {
    TruncationConfig cfg = TruncationConfig::unit(3, 2);
    CHECK_NOTHROW(cfg.validate());

    TruncationConfig bad = cfg;
    bad.e_weights[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.h_weights = Vec::Ones(3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    Vec wrong = Vec::Ones(4);
    CHECK_THROWS_AS(e_norm(cfg, wrong), DimensionError);
}

TEST_CASE("time grid and coarsening") {
    TimeGrid grid(1.0, 8);
    CHECK(grid.dt == doctest::Approx(0.125).epsilon(1e-16));
    CHECK(grid.node(8) == doctest::Approx(1.0).epsilon(1e-15));

    TimeGrid coarse = grid.coarsened(4);
    CHECK(coarse.steps == 2);
    CHECK(coarse.horizon == grid.horizon);
    CHECK(coarse.node(1) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(grid.coarsened(3), Error);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), Error);
    CHECK_THROWS_AS(TimeGrid(-1.0, 4), Error);
}

TEST_CASE("diagonal semigroup laws") {
    Vec spectrum(3);
    spectrum << -1.0, -2.5, 0.3;
    Semigroup sg = Semigroup::diagonal(spectrum);

    GaussianStream rng(7, 0);
    for (int trial = 0; trial < 5; ++trial) {
        double s = std::abs(rng.normal());
        double t = std::abs(rng.normal());
        Mat lhs = sg.matrix(s + t);
        Mat rhs = sg.matrix(s) * sg.matrix(t);
        CHECK((lhs - rhs).norm() <= 1e-12);
    }
    CHECK((sg.matrix(0.0) - Mat::Identity(3, 3)).norm() == 0.0);

    // Inverse composes back to the identity.
    Vec v(3);
    v << 1.0, -2.0, 0.5;
    Vec back = sg.apply_inverse(0.7, sg.apply(0.7, v));
    CHECK((back - v).norm() <= 1e-12);
}

TEST_CASE("dense semigroup closed forms") {
    // Nilpotent generator: e^{tN} = I + tN exactly.
    Mat N = Mat::Zero(2, 2);
    N(0, 1) = 3.0;
    Semigroup sg = Semigroup::dense(N);
    Mat expected = Mat::Identity(2, 2) + 0.4 * N;
    CHECK((sg.matrix(0.4) - expected).norm() <= 1e-14);

    // Rotation generator: e^{tJ} = [[cos t, -sin t], [sin t, cos t]].
    Mat J(2, 2);
    J << 0.0, -1.0, 1.0, 0.0;
    Semigroup rot = Semigroup::dense(J);
    double t = 0.9;
    Mat R(2, 2);
    R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    CHECK((rot.matrix(t) - R).norm() <= 1e-13);

    // Semigroup law holds for the dense kind too.
    CHECK((rot.matrix(1.3) - rot.matrix(0.8) * rot.matrix(0.5)).norm() <= 1e-12);

    CHECK_THROWS_AS(rot.spectrum(), Error);
    CHECK_THROWS_AS(rot.apply_inverse(0.5, Vec::Ones(2)), Error);
}

TEST_CASE("inverse overflow cap") {
    Vec spectrum(2);
    spectrum << -100.0, -1.0;
    Semigroup sg = Semigroup::diagonal(spectrum);

    CHECK_NOTHROW(sg.apply_inverse(0.1, Vec::Ones(2)));
    try {
        sg.apply_inverse(1.0, Vec::Ones(2), 40.0);
        CHECK(false);
    } catch (const OverflowCapError& err) {
        CHECK(err.magnitude == doctest::Approx(100.0));
        CHECK(err.cap == doctest::Approx(40.0));
    }
}
