#pragma once

#include "hypolab/flows.hpp"

namespace hypolab {

/// Malliavin derivative D_r X_t as an n x m matrix per node t >= r; the
/// convention D_r X_t = 0 for t < r is part of the interface.
struct MalliavinBundle {
    TimeGrid grid;
    int r_index = 0;
    std::vector<Mat> D;  // D[j] = D_{t_r} X_{t_j} for j >= r_index, else zero

    const Mat& at(int t_index) const { return D[static_cast<std::size_t>(t_index)]; }
};

/// Integrates the derivative's own equation forward from D_{t_r} X_{t_r} =
/// sigma(X_{t_r}) with the same exponential Euler factors as the state.
MalliavinBundle solve_malliavin_sde(const ModelSpec& model, const SolutionPath& X,
                                    const BrownianPath& path, int r_index);

/// Product-formula route: D_{t_r} X_{t_j} = Y_{t_j} Z_{t_r} sigma(X_{t_r}).
/// The bundle must carry Y and Z.
Mat product_formula(const ModelSpec& model, const SolutionPath& X, const FlowBundle& flows,
                    int r_index, int t_index);

/// Linear functionals commute with the derivative: F (D_r X_t) computed two
/// ways (different association orders through Y Z sigma) must agree to
/// rounding.  Returns the relative Frobenius difference.
double chain_rule_check(const Mat& F, const ModelSpec& model, const SolutionPath& X,
                        const FlowBundle& flows, int r_index, int t_index);

/// Covariance-type operator at node t_index (default: terminal node):
///     C = sum_{j < t_index} Z_j sigma(X_j) sigma(X_j)^T Z_j^T dt
/// (left endpoint rule, then symmetrized), and the reduced matrix
///     gamma = (F Y_t) C (F Y_t)^T
/// for a full-row-rank functional F.
struct CovarianceReport {
    int t_index = 0;
    Mat C;          // n x n
    Mat FY;         // k x n, the factor F Y_t entering gamma
    Mat gamma;      // k x k
    Vec gamma_eigenvalues;  // ascending
    double min_eigenvalue = 0.0;
    const char* quadrature = "left_riemann";
};

CovarianceReport covariance(const ModelSpec& model, const SolutionPath& X,
                            const FlowBundle& flows, const Mat& F, int t_index = -1);

/// The quadratic form sum_j dt |sigma(X_j)^T Z_j^T (F Y_t)^T phi|^2, the
/// integral representation of phi^T gamma phi; the report's gamma must agree
/// with it up to rounding.
double quadratic_form(const ModelSpec& model, const SolutionPath& X, const FlowBundle& flows,
                      const CovarianceReport& report, const Vec& phi);

}  // namespace hypolab
