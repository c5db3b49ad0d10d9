#include "hypolab/malliavin.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace hypolab {

MalliavinBundle solve_malliavin_sde(const ModelSpec& model, const SolutionPath& X,
                                    const BrownianPath& path, int r_index) {
    const TimeGrid& grid = path.grid;
    if (r_index < 0 || r_index > grid.steps)
        throw DimensionError("malliavin: r_index outside the grid");
    const int n = model.n();
    const int m = model.m();

    MalliavinBundle bundle;
    bundle.grid = grid;
    bundle.r_index = r_index;
    bundle.D.assign(static_cast<std::size_t>(grid.steps) + 1, Mat::Zero(n, m));

    Mat semi = model.sg.matrix(grid.dt);
    Mat D = big_sigma(model, X.at(r_index));
    bundle.D[static_cast<std::size_t>(r_index)] = D;
    for (int j = r_index; j < grid.steps; ++j) {
        Mat G = Mat::Identity(n, n) + model.drift.jacobian(X.at(j)) * grid.dt;
        for (int k = 0; k < m; ++k) {
            G += model.diffusion.columns[static_cast<std::size_t>(k)].jacobian(X.at(j)) *
                 path.increments(j, k);
        }
        D = semi * (G * D);
        bundle.D[static_cast<std::size_t>(j) + 1] = D;
    }
    return bundle;
}

Mat product_formula(const ModelSpec& model, const SolutionPath& X, const FlowBundle& flows,
                    int r_index, int t_index) {
    if (flows.Y.empty() || flows.Z.empty())
        throw Error("product_formula: flow bundle lacks Y or Z");
    if (r_index < 0 || t_index < 0 || t_index >= static_cast<int>(flows.Y.size()) ||
        r_index >= static_cast<int>(flows.Z.size()))
        throw DimensionError("product_formula: index outside the grid");
    if (t_index < r_index) {
        return Mat::Zero(model.n(), model.m());
    }
    Mat sigma_r = big_sigma(model, X.at(r_index));
    return flows.Y[static_cast<std::size_t>(t_index)] *
           (flows.Z[static_cast<std::size_t>(r_index)] * sigma_r);
}

double chain_rule_check(const Mat& F, const ModelSpec& model, const SolutionPath& X,
                        const FlowBundle& flows, int r_index, int t_index) {
    if (F.cols() != model.n()) throw DimensionError("chain_rule_check: F has wrong column count");
    Mat sigma_r = big_sigma(model, X.at(r_index));
    const Mat& Y = flows.Y[static_cast<std::size_t>(t_index)];
    const Mat& Z = flows.Z[static_cast<std::size_t>(r_index)];
    // Route 1: F applied to the assembled derivative.
    Mat lhs = F * (Y * (Z * sigma_r));
    // Route 2: the functional absorbed into the flow first.
    Mat rhs = ((F * Y) * Z) * sigma_r;
    double scale = rhs.norm();
    return scale == 0.0 ? (lhs - rhs).norm() : (lhs - rhs).norm() / scale;
}

CovarianceReport covariance(const ModelSpec& model, const SolutionPath& X,
                            const FlowBundle& flows, const Mat& F, int t_index) {
    if (flows.Y.empty() || flows.Z.empty()) throw Error("covariance: flow bundle lacks Y or Z");
    const int nodes = static_cast<int>(flows.Z.size());
    if (t_index < 0) t_index = nodes - 1;
    if (t_index <= 0 || t_index >= nodes)
        throw DimensionError("covariance: t_index outside the grid");
    const int n = model.n();
    if (F.cols() != n) throw DimensionError("covariance: F has wrong column count");
    if (F.rows() > n) throw DimensionError("covariance: F has more rows than n");
    {
        // F must have full row rank for gamma to be meaningful.
        Eigen::JacobiSVD<Mat> svd(F);
        double tol = 1e-12 * svd.singularValues()(0);
        if (!(svd.singularValues().minCoeff() > tol))
            throw Error("covariance: F is row-rank deficient");
    }

    const double dt = flows.grid.dt;
    Mat C = Mat::Zero(n, n);
    for (int j = 0; j < t_index; ++j) {
        Mat ZS = flows.Z[static_cast<std::size_t>(j)] * big_sigma(model, X.at(j));
        C += ZS * ZS.transpose() * dt;
    }
    C = 0.5 * (C + C.transpose()).eval();

    CovarianceReport report;
    report.t_index = t_index;
    report.C = C;
    report.FY = F * flows.Y[static_cast<std::size_t>(t_index)];
    report.gamma = report.FY * C * report.FY.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (report.gamma + report.gamma.transpose()));
    report.gamma_eigenvalues = eig.eigenvalues();
    report.min_eigenvalue = report.gamma_eigenvalues.minCoeff();
    return report;
}

double quadratic_form(const ModelSpec& model, const SolutionPath& X, const FlowBundle& flows,
                      const CovarianceReport& report, const Vec& phi) {
    if (phi.size() != report.gamma.rows())
        throw DimensionError("quadratic_form: phi has wrong length");
    const double dt = flows.grid.dt;
    Vec w = report.FY.transpose() * phi;  // length n
    double acc = 0.0;
    for (int j = 0; j < report.t_index; ++j) {
        Vec contraction =
            big_sigma(model, X.at(j)).transpose() *
            (flows.Z[static_cast<std::size_t>(j)].transpose() * w);
        acc += contraction.squaredNorm() * dt;
    }
    return acc;
}

}  // namespace hypolab
