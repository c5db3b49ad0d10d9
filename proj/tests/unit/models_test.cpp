#include <cmath>

#include "doctest.h"
#include "hypolab/models.hpp"

using namespace hypolab;

namespace {

// f(x, y) = (x^2 y, x + y^3) with hand-written derivatives.
Vec poly2(const Vec& x) {
    Vec out(2);
    out << x[0] * x[0] * x[1], x[0] + x[1] * x[1] * x[1];
    return out;
}

Mat poly2_jac(const Vec& x) {
    Mat jac(2, 2);
    jac << 2.0 * x[0] * x[1], x[0] * x[0],
           1.0, 3.0 * x[1] * x[1];
    return jac;
}

Vec poly2_hess(const Vec& x, const Vec& u, const Vec& v) {
    // Bilinear forms of the coordinate Hessians:
    //   f1: [[2y, 2x], [2x, 0]]    f2: [[0, 0], [0, 6y]]
    Vec out(2);
    out[0] = 2.0 * x[1] * u[0] * v[0] + 2.0 * x[0] * (u[0] * v[1] + u[1] * v[0]);
    out[1] = 6.0 * x[1] * u[1] * v[1];
    return out;
}

}  // namespace

TEST_CASE("finite differences match hand derivatives on polynomials") {
    Vec x(2);
    x << 1.2, -0.7;

    Mat jac = fd_jacobian(poly2, x);
    CHECK((jac - poly2_jac(x)).norm() <= 1e-7);

    Vec u(2), v(2);
    u << 0.3, -1.1;
    v << 0.8, 0.25;
    Vec hess = fd_hessian_action(poly2, x, u, v);
    CHECK((hess - poly2_hess(x, u, v)).norm() <= 1e-6);

    // Symmetry in (u, v) is exact by construction.
    Vec swapped = fd_hessian_action(poly2, x, v, u);
    CHECK((hess - swapped).norm() == 0.0);

    Vec dir = fd_directional(poly2, x, u);
    CHECK((dir - poly2_jac(x) * u).norm() <= 1e-7);
}

TEST_CASE("vector field fallbacks agree with analytic derivatives") {
    VectorField analytic;
    analytic.dim = 2;
    analytic.eval_fn = poly2;
    analytic.jac_fn = poly2_jac;
    analytic.hess_fn = poly2_hess;

    VectorField numeric = VectorField::from_eval(2, poly2);
    CHECK(!numeric.has_analytic_jacobian());

    Vec x(2);
    x << 0.4, 0.9;
    CHECK((numeric.jacobian(x) - analytic.jacobian(x)).norm() <= 1e-7);

    Vec u = Vec::Ones(2), v(2);
    v << -1.0, 2.0;
    CHECK((numeric.hessian_action(x, u, v) - analytic.hessian_action(x, u, v)).norm() <= 1e-6);
}

TEST_CASE("field factories") {
    Vec c(2);
    c << 3.0, -1.0;
    VectorField constant = VectorField::constant(c);
    CHECK((constant.eval(Vec::Zero(2)) - c).norm() == 0.0);
    CHECK(constant.jacobian(Vec::Ones(2)).norm() == 0.0);
    CHECK(constant.hessian_action(Vec::Ones(2), c, c).norm() == 0.0);

    Mat M(2, 2);
    M << 1.0, 2.0, -0.5, 0.0;
    VectorField linear = VectorField::linear(M);
    Vec x(2);
    x << 2.0, -3.0;
    CHECK((linear.eval(x) - M * x).norm() == 0.0);
    CHECK((linear.jacobian(x) - M).norm() == 0.0);

    VectorField affine = VectorField::affine(M, c);
    CHECK((affine.eval(x) - (M * x + c)).norm() == 0.0);

    CHECK(VectorField::zero(3).eval(Vec::Ones(3)).norm() == 0.0);
}

TEST_CASE("polynomial fields carry symbolic derivatives") {
    // Coordinate 0: 2 x0^2 x1 - x1;  coordinate 1: 0.5 x0^3.
    std::vector<std::vector<Monomial>> terms(2);
    terms[0].push_back({2.0, {2, 1}});
    terms[0].push_back({-1.0, {0, 1}});
    terms[1].push_back({0.5, {3, 0}});
    VectorField field = polynomial_field(2, terms);

    Vec x(2);
    x << 1.3, -0.4;
    Vec expected(2);
    expected << 2.0 * x[0] * x[0] * x[1] - x[1], 0.5 * x[0] * x[0] * x[0];
    CHECK((field.eval(x) - expected).norm() <= 1e-14);

    CHECK(field.has_analytic_jacobian());
    CHECK((field.jacobian(x) - fd_jacobian([&](const Vec& p) { return field.eval(p); }, x)).norm()
          <= 1e-7);

    Vec u(2), v(2);
    u << 0.7, -0.2;
    v << -1.1, 0.6;
    Vec fd_hess = fd_hessian_action([&](const Vec& p) { return field.eval(p); }, x, u, v);
    CHECK((field.hessian_action(x, u, v) - fd_hess).norm() <= 1e-6);

    // Degree cap is enforced.
    std::vector<std::vector<Monomial>> quartic(1);
    quartic[0].push_back({1.0, {4}});
    CHECK_THROWS_AS(polynomial_field(1, quartic), ConfigError);
}

TEST_CASE("sigma0 applies the divergence correction") {
    // 1-d model: A = lambda, alpha(x) = c x^2, sigma(x) = s x.
    const double lambda = -0.8, c = 0.4, s = 0.6;
    ModelSpec model;
    model.name = "toy1d";
    model.cfg = TruncationConfig::unit(1, 1);
    model.sg = Semigroup::diagonal(Vec::Constant(1, lambda));
    std::vector<std::vector<Monomial>> drift_terms(1);
    drift_terms[0].push_back({c, {2}});
    model.drift = polynomial_field(1, drift_terms);
    std::vector<std::vector<Monomial>> diff_terms(1);
    diff_terms[0].push_back({s, {1}});
    model.diffusion.columns.push_back(polynomial_field(1, diff_terms));
    model.initial_x = Vec::Constant(1, 0.5);
    model.validate();

    Vec x = Vec::Constant(1, 1.7);
    // sigma' sigma = s * (s x), so sigma0 = lambda x + c x^2 - s^2 x / 2.
    double expected = lambda * x[0] + c * x[0] * x[0] - 0.5 * s * s * x[0];
    CHECK(sigma0(model, x)[0] == doctest::Approx(expected).epsilon(1e-12));

    VectorField field = sigma0_field(model);
    CHECK(field.eval(x)[0] == doctest::Approx(expected).epsilon(1e-12));

    Mat sig = big_sigma(model, x);
    REQUIRE(sig.rows() == 1);
    REQUIRE(sig.cols() == 1);
    CHECK(sig(0, 0) == doctest::Approx(s * x[0]).epsilon(1e-14));
}

TEST_CASE("zoo models validate and freeze their shapes") {
    for (const std::string& name : zoo_names()) {
        ModelSpec model = zoo(name);
        CHECK(model.name == name);
        CHECK(model.n() > 0);
        CHECK(model.m() == model.diffusion.m());
        CHECK(model.initial_x.size() == model.n());
        CHECK(model.default_horizon > 0.0);
    }
    CHECK_THROWS_AS(zoo("no_such_model"), ConfigError);

    // Constant-diffusion models have vanishing correction: sigma0 = A x + alpha.
    ModelSpec lg = zoo("linear_gauss");
    Vec x = lg.initial_x;
    Vec expected = lg.sg.generator() * x + lg.drift.eval(x);
    CHECK((sigma0(lg, x) - expected).norm() <= 1e-14);
}

TEST_CASE("model validation rejects mismatched dimensions") {
    ModelSpec model = zoo("hypo3");
    model.initial_x = Vec::Zero(2);
    CHECK_THROWS_AS(model.validate(), Error);

    ModelSpec model2 = zoo("hypo3");
    model2.diffusion.columns.push_back(VectorField::constant(Vec::Zero(3)));
    CHECK_THROWS_AS(model2.validate(), Error);
}
