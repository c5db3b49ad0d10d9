#include <cmath>
#include <numbers>

#include "hypolab/models.hpp"

namespace hypolab {

namespace {

// Dissipative diagonal generator with multiplicative, coordinatewise noise.
// lambda_k = -(k pi)^2 * 0.05 keeps |lambda_max| * T under the overflow cap
// for horizons up to ~1, so the conjugated flow formulation stays usable.
ModelSpec make_heat_mult() {
    const int n = 8;
    ModelSpec model;
    model.name = "heat_mult";
    model.cfg = TruncationConfig::unit(n, n);

    Vec spectrum(n);
    for (int k = 0; k < n; ++k) {
        double mode = static_cast<double>(k + 1) * std::numbers::pi;
        spectrum[k] = -0.05 * mode * mode;
    }
    model.sg = Semigroup::diagonal(spectrum);

    VectorField drift;
    drift.dim = n;
    drift.eval_fn = [n](const Vec& x) -> Vec {
        Vec out(n);
        for (int i = 0; i < n; ++i) out[i] = 0.5 * std::tanh(x[i]);
        return out;
    };
    drift.jac_fn = [n](const Vec& x) -> Mat {
        Mat jac = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            double c = std::cosh(x[i]);
            jac(i, i) = 0.5 / (c * c);
        }
        return jac;
    };
    drift.hess_fn = [n](const Vec& x, const Vec& u, const Vec& v) -> Vec {
        Vec out(n);
        for (int i = 0; i < n; ++i) {
            double t = std::tanh(x[i]);
            double c = std::cosh(x[i]);
            out[i] = -t / (c * c) * u[i] * v[i];
        }
        return out;
    };
    drift.differentiability_order = 1 << 20;
    model.drift = drift;

    for (int k = 0; k < n; ++k) {
        VectorField column;
        column.dim = n;
        column.eval_fn = [n, k](const Vec& x) -> Vec {
            Vec out = Vec::Zero(n);
            out[k] = 0.3 * (1.0 + 0.5 * std::tanh(x[k]));
            return out;
        };
        column.jac_fn = [n, k](const Vec& x) -> Mat {
            Mat jac = Mat::Zero(n, n);
            double c = std::cosh(x[k]);
            jac(k, k) = 0.15 / (c * c);
            return jac;
        };
        column.hess_fn = [n, k](const Vec& x, const Vec& u, const Vec& v) -> Vec {
            Vec out = Vec::Zero(n);
            double t = std::tanh(x[k]);
            double c = std::cosh(x[k]);
            out[k] = -0.3 * t / (c * c) * u[k] * v[k];
            return out;
        };
        column.differentiability_order = 1 << 20;
        model.diffusion.columns.push_back(column);
    }

    Vec x0(n);
    for (int k = 0; k < n; ++k) x0[k] = 0.5 / static_cast<double>(k + 1);
    model.initial_x = x0;
    model.default_horizon = 0.5;
    return model;
}

// Three-state chain driven by one Brownian component: noise enters x_1, the
// drift shifts x_1 into x_2 and x_2 into x_3.  The span condition holds only
// after taking two levels of corrected brackets.
ModelSpec make_hypo3() {
    const int n = 3;
    ModelSpec model;
    model.name = "hypo3";
    model.cfg = TruncationConfig::unit(n, 1);
    model.sg = Semigroup::diagonal(Vec::Zero(n));

    Mat shift = Mat::Zero(n, n);
    shift(1, 0) = 1.0;
    shift(2, 1) = 1.0;
    model.drift = VectorField::linear(shift);

    model.diffusion.columns.push_back(VectorField::constant(Vec::Unit(n, 0)));

    model.initial_x = Vec::Zero(n);
    model.default_horizon = 1.0;
    return model;
}

// Noise spans only the first coordinate and nothing moves the second, so the
// law of x_2 stays the point mass at its initial value.
ModelSpec make_degenerate2() {
    const int n = 2;
    ModelSpec model;
    model.name = "degenerate2";
    model.cfg = TruncationConfig::unit(n, 1);
    model.sg = Semigroup::diagonal(Vec::Zero(n));
    model.drift = VectorField::zero(n);
    model.diffusion.columns.push_back(VectorField::constant(Vec::Unit(n, 0)));
    model.initial_x = Vec(Vec::Zero(n));
    model.initial_x[1] = 1.0;
    model.default_horizon = 1.0;
    return model;
}

// Linear drift + constant full-rank diffusion: the solution is Gaussian and
// every flow and covariance quantity has a closed form to test against.
ModelSpec make_linear_gauss() {
    const int n = 4;
    ModelSpec model;
    model.name = "linear_gauss";
    model.cfg = TruncationConfig::unit(n, n);

    Vec spectrum(n);
    spectrum << -0.3, -0.6, -0.9, -1.2;
    model.sg = Semigroup::diagonal(spectrum);

    Mat B(n, n);
    B << -0.6, 0.2, 0.0, 0.1,
          0.1, -0.7, 0.2, 0.0,
          0.0, 0.1, -0.5, 0.2,
          0.2, 0.0, 0.1, -0.8;
    model.drift = VectorField::linear(B);

    Mat S(n, n);
    S << 0.40, 0.10, 0.00, 0.00,
         0.00, 0.35, 0.10, 0.00,
         0.05, 0.00, 0.30, 0.10,
         0.00, 0.05, 0.00, 0.25;
    for (int k = 0; k < n; ++k) {
        model.diffusion.columns.push_back(VectorField::constant(S.col(k)));
    }

    Vec x0(n);
    x0 << 0.5, -0.3, 0.2, 0.1;
    model.initial_x = x0;
    model.default_horizon = 1.0;
    return model;
}

}  // namespace

ModelSpec zoo(const std::string& name) {
    ModelSpec model;
    if (name == "heat_mult") {
        model = make_heat_mult();
    } else if (name == "hypo3") {
        model = make_hypo3();
    } else if (name == "degenerate2") {
        model = make_degenerate2();
    } else if (name == "linear_gauss") {
        model = make_linear_gauss();
    } else {
        throw ConfigError("unknown model '" + name + "'; available: heat_mult, hypo3, degenerate2, linear_gauss");
    }
    model.validate();
    return model;
}

std::vector<std::string> zoo_names() {
    return {"heat_mult", "hypo3", "degenerate2", "linear_gauss"};
}

}  // namespace hypolab
