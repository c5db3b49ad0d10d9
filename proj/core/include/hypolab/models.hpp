#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hypolab/rng.hpp"
#include "hypolab/spaces.hpp"

namespace hypolab {

/// Central difference with one Richardson step: error O(step^4) for smooth f.
Vec fd_directional(const std::function<Vec(const Vec&)>& f, const Vec& x, const Vec& u,
                   double step = 1e-4);

/// Jacobian assembled column-by-column from fd_directional.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double step = 1e-4);

/// Mixed second derivative f''(x)(u, v) by a 4-point second difference plus a
/// Richardson step.  Exactly symmetric in (u, v) by construction.
Vec fd_hessian_action(const std::function<Vec(const Vec&)>& f, const Vec& x, const Vec& u,
                      const Vec& v, double step = 1e-4);

/// Vector field on the truncated state space, with optional analytic
/// derivatives.  Missing derivatives fall back to the finite differences
/// above; differentiability_order records how many derivatives are
/// trustworthy (analytic or numeric).
struct VectorField {
    using EvalFn = std::function<Vec(const Vec&)>;
    using JacFn = std::function<Mat(const Vec&)>;
    using HessFn = std::function<Vec(const Vec&, const Vec&, const Vec&)>;

    int dim = 0;                      // state dimension n
    EvalFn eval_fn;
    JacFn jac_fn;                     // optional
    HessFn hess_fn;                   // optional
    int differentiability_order = 2;

    Vec eval(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    Vec hessian_action(const Vec& x, const Vec& u, const Vec& v) const;

    bool has_analytic_jacobian() const { return static_cast<bool>(jac_fn); }

    static VectorField zero(int n);
    static VectorField constant(Vec value);
    static VectorField linear(Mat M);                 // x -> M x
    static VectorField affine(Mat M, Vec b);          // x -> M x + b
    static VectorField from_eval(int n, EvalFn f);    // numeric derivatives only
};

/// Monomial c * prod_i x_i^powers[i]; powers has one entry per coordinate.
struct Monomial {
    double coeff = 0.0;
    std::vector<int> powers;

    int total_degree() const;
};

/// Polynomial vector field with symbolic first and second derivatives.
/// terms[i] is the monomial list for coordinate i; total degree is capped at 3
/// (the guardrail for user-supplied models, matching what the bracket
/// machinery is tested against).
VectorField polynomial_field(int n, const std::vector<std::vector<Monomial>>& terms,
                             int max_degree = 3);

/// Columns sigma_1..sigma_m of the diffusion, each a field on R^n.
struct DiffusionFamily {
    std::vector<VectorField> columns;

    int m() const { return static_cast<int>(columns.size()); }

    /// n x m matrix [sigma_1(x) ... sigma_m(x)].
    Mat assemble(const Vec& x) const;
};

/// A complete model: truncation geometry, semigroup, drift perturbation
/// alpha, diffusion columns, and a default experiment horizon.
struct ModelSpec {
    std::string name;
    TruncationConfig cfg;
    Semigroup sg = Semigroup::diagonal(Vec::Zero(1));
    VectorField drift;          // alpha, the perturbation on top of A
    DiffusionFamily diffusion;
    Vec initial_x;
    double default_horizon = 1.0;

    int n() const { return cfg.n; }
    int m() const { return cfg.m; }

    /// Throws if field/diffusion dimensions disagree with the truncation.
    void validate() const;
};

/// Ito-to-Stratonovich corrected drift
///     sigma_0(x) = A x + alpha(x) - 1/2 sum_k sigma_k'(x) sigma_k(x).
Vec sigma0(const ModelSpec& model, const Vec& x);

/// sigma_0 as a VectorField (derivatives via finite differences).
VectorField sigma0_field(const ModelSpec& model);

/// The diffusion matrix [sigma_1(x) ... sigma_m(x)].
Mat big_sigma(const ModelSpec& model, const Vec& x);

/// Built-in model zoo.  Names: heat_mult, hypo3, degenerate2, linear_gauss.
ModelSpec zoo(const std::string& name);
std::vector<std::string> zoo_names();

}  // namespace hypolab
