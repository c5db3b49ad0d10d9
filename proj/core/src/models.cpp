#include "hypolab/models.hpp"

#include <cmath>

namespace hypolab {

Vec fd_directional(const std::function<Vec(const Vec&)>& f, const Vec& x, const Vec& u,
                   double step) {
    auto central = [&](double h) -> Vec { return (f(x + h * u) - f(x - h * u)) / (2.0 * h); };
    Vec coarse = central(step);
    Vec fine = central(step / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double step) {
    const Eigen::Index n = x.size();
    Mat jac;
    for (Eigen::Index j = 0; j < n; ++j) {
        Vec unit = Vec::Zero(n);
        unit[j] = 1.0;
        Vec column = fd_directional(f, x, unit, step);
        if (j == 0) jac.resize(column.size(), n);
        jac.col(j) = column;
    }
    return jac;
}

Vec fd_hessian_action(const std::function<Vec(const Vec&)>& f, const Vec& x, const Vec& u,
                      const Vec& v, double step) {
    auto mixed = [&](double h) -> Vec {
        // d is invariant and m flips sign when (u, v) swap, and the two
        // symmetric pairs are summed before subtracting, so the result is
        // bitwise symmetric in (u, v).
        Vec d = h * u + h * v;
        Vec m = h * u - h * v;
        return ((f(x + d) + f(x - d)) - (f(x + m) + f(x - m))) / (4.0 * h * h);
    };
    Vec coarse = mixed(step);
    Vec fine = mixed(step / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

Vec VectorField::eval(const Vec& x) const {
    require_dim(x, dim, "vector field eval");
    return eval_fn(x);
}

Mat VectorField::jacobian(const Vec& x) const {
    require_dim(x, dim, "vector field jacobian");
    if (jac_fn) return jac_fn(x);
    return fd_jacobian(eval_fn, x);
}

Vec VectorField::hessian_action(const Vec& x, const Vec& u, const Vec& v) const {
    require_dim(x, dim, "vector field hessian");
    if (hess_fn) return hess_fn(x, u, v);
    return fd_hessian_action(eval_fn, x, u, v);
}

VectorField VectorField::zero(int n) {
    return constant(Vec::Zero(n));
}

VectorField VectorField::constant(Vec value) {
    VectorField f;
    f.dim = static_cast<int>(value.size());
    int n = f.dim;
    f.eval_fn = [value](const Vec&) { return value; };
    f.jac_fn = [n](const Vec&) { return Mat::Zero(n, n); };
    f.hess_fn = [n](const Vec&, const Vec&, const Vec&) { return Vec::Zero(n); };
    f.differentiability_order = 1 << 20;
    return f;
}

VectorField VectorField::linear(Mat M) {
    return affine(std::move(M), Vec());
}

VectorField VectorField::affine(Mat M, Vec b) {
    VectorField f;
    f.dim = static_cast<int>(M.cols());
    if (b.size() == 0) b = Vec::Zero(M.rows());
    f.eval_fn = [M, b](const Vec& x) -> Vec { return M * x + b; };
    f.jac_fn = [M](const Vec&) { return M; };
    int rows = static_cast<int>(M.rows());
    f.hess_fn = [rows](const Vec&, const Vec&, const Vec&) { return Vec::Zero(rows); };
    f.differentiability_order = 1 << 20;
    return f;
}

VectorField VectorField::from_eval(int n, EvalFn f) {
    VectorField field;
    field.dim = n;
    field.eval_fn = std::move(f);
    field.differentiability_order = 2;
    return field;
}

int Monomial::total_degree() const {
    int total = 0;
    for (int p : powers) total += p;
    return total;
}

namespace {

double monomial_eval(const Monomial& mono, const Vec& x) {
    double value = mono.coeff;
    for (std::size_t i = 0; i < mono.powers.size(); ++i) {
        for (int p = 0; p < mono.powers[i]; ++p) value *= x[static_cast<Eigen::Index>(i)];
    }
    return value;
}

// d/dx_j of the monomial, as a new monomial (coeff 0 when power is 0).
Monomial monomial_derivative(const Monomial& mono, int j) {
    Monomial out = mono;
    if (mono.powers[j] == 0) {
        out.coeff = 0.0;
        return out;
    }
    out.coeff = mono.coeff * static_cast<double>(mono.powers[j]);
    out.powers[j] -= 1;
    return out;
}

}  // namespace

VectorField polynomial_field(int n, const std::vector<std::vector<Monomial>>& terms,
                             int max_degree) {
    if (static_cast<int>(terms.size()) != n)
        throw ConfigError("polynomial field: need one term list per coordinate");
    for (const auto& coordinate : terms) {
        for (const auto& mono : coordinate) {
            if (static_cast<int>(mono.powers.size()) != n)
                throw ConfigError("polynomial field: monomial power list must have length n");
            for (int p : mono.powers) {
                if (p < 0) throw ConfigError("polynomial field: negative power");
            }
            if (mono.total_degree() > max_degree)
                throw ConfigError("polynomial field: total degree exceeds " +
                                  std::to_string(max_degree));
        }
    }

    VectorField f;
    f.dim = n;
    f.eval_fn = [terms, n](const Vec& x) -> Vec {
        Vec out = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            for (const auto& mono : terms[i]) out[i] += monomial_eval(mono, x);
        }
        return out;
    };
    f.jac_fn = [terms, n](const Vec& x) -> Mat {
        Mat jac = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (const auto& mono : terms[i]) {
                for (int j = 0; j < n; ++j) {
                    if (mono.powers[j] > 0) jac(i, j) += monomial_eval(monomial_derivative(mono, j), x);
                }
            }
        }
        return jac;
    };
    f.hess_fn = [terms, n](const Vec& x, const Vec& u, const Vec& v) -> Vec {
        Vec out = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            for (const auto& mono : terms[i]) {
                for (int j = 0; j < n; ++j) {
                    if (mono.powers[j] == 0) continue;
                    Monomial dj = monomial_derivative(mono, j);
                    for (int k = 0; k < n; ++k) {
                        if (dj.powers[k] == 0) continue;
                        out[i] += monomial_eval(monomial_derivative(dj, k), x) * u[j] * v[k];
                    }
                }
            }
        }
        return out;
    };
    f.differentiability_order = 1 << 20;
    return f;
}

Mat DiffusionFamily::assemble(const Vec& x) const {
    if (columns.empty()) throw ConfigError("diffusion: no columns");
    Mat out(columns.front().dim, m());
    for (int k = 0; k < m(); ++k) out.col(k) = columns[static_cast<std::size_t>(k)].eval(x);
    return out;
}

void ModelSpec::validate() const {
    cfg.validate();
    if (sg.dim() != cfg.n) throw ConfigError("model " + name + ": semigroup dimension != n");
    if (drift.dim != cfg.n) throw ConfigError("model " + name + ": drift dimension != n");
    if (diffusion.m() != cfg.m)
        throw ConfigError("model " + name + ": diffusion column count != m");
    for (const auto& column : diffusion.columns) {
        if (column.dim != cfg.n)
            throw ConfigError("model " + name + ": diffusion column dimension != n");
    }
    if (initial_x.size() != cfg.n)
        throw ConfigError("model " + name + ": initial state dimension != n");
    if (!(default_horizon > 0.0))
        throw ConfigError("model " + name + ": default horizon must be positive");
}

Vec sigma0(const ModelSpec& model, const Vec& x) {
    Vec out = model.sg.generator() * x + model.drift.eval(x);
    for (const auto& column : model.diffusion.columns) {
        out -= 0.5 * (column.jacobian(x) * column.eval(x));
    }
    return out;
}

VectorField sigma0_field(const ModelSpec& model) {
    int order = model.drift.differentiability_order;
    for (const auto& column : model.diffusion.columns) {
        order = std::min(order, column.differentiability_order - 1);
    }
    VectorField f;
    f.dim = model.n();
    // Captures a copy; the field stays valid after the original model is gone.
    f.eval_fn = [model](const Vec& x) { return sigma0(model, x); };
    f.differentiability_order = std::max(0, order);
    return f;
}

Mat big_sigma(const ModelSpec& model, const Vec& x) {
    return model.diffusion.assemble(x);
}

}  // namespace hypolab
