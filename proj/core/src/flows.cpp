#include "hypolab/flows.hpp"

#include <Eigen/LU>
#include <cmath>
#include <memory>

namespace hypolab {

const char* to_string(Formulation f) {
    return f == Formulation::conjugated ? "conjugated" : "direct";
}

namespace {

// G_j = I + alpha'(X_j) dt + sum_k sigma_k'(X_j) dW^k: the coefficient part
// of one Euler step shared by Y and the inverse recursions.
Mat step_factor(const ModelSpec& model, const Vec& x, double dt,
                const Eigen::Ref<const Eigen::RowVectorXd>& dW) {
    const int n = model.n();
    Mat G = Mat::Identity(n, n) + model.drift.jacobian(x) * dt;
    for (int k = 0; k < model.m(); ++k) {
        G += model.diffusion.columns[static_cast<std::size_t>(k)].jacobian(x) * dW[k];
    }
    return G;
}

// H_j = I + (Sigma_j - alpha'(X_j)) dt - sum_k sigma_k'(X_j) dW^k with
// Sigma_j = sum_k sigma_k'(X_j)^2: the inverse-flow coefficient factor.
Mat inverse_step_factor(const ModelSpec& model, const Vec& x, double dt,
                        const Eigen::Ref<const Eigen::RowVectorXd>& dW) {
    const int n = model.n();
    Mat H = Mat::Identity(n, n) - model.drift.jacobian(x) * dt;
    for (int k = 0; k < model.m(); ++k) {
        Mat jac = model.diffusion.columns[static_cast<std::size_t>(k)].jacobian(x);
        H += jac * jac * dt;
        H -= jac * dW[k];
    }
    return H;
}

// Tracks e^{-t_j A} for dense semigroups by accumulating the one-step inverse
// factor; growth beyond e^{cap} fails the same way the diagonal cap does.
struct DenseInverseTracker {
    Mat value;
    Mat step;
    double cap;

    DenseInverseTracker(const Semigroup& sg, double dt, double cap_in) {
        value = Mat::Identity(sg.dim(), sg.dim());
        step = sg.matrix(dt).partialPivLu().inverse();
        cap = cap_in;
    }

    void advance() {
        value = value * step;
        double growth = value.cwiseAbs().maxCoeff();
        if (!(growth < std::exp(cap))) {
            throw OverflowCapError("inverse semigroup accumulation exceeded cap", std::log(growth),
                                   cap);
        }
    }
};

Mat inverse_semigroup_at(const ModelSpec& model, double t, double cap,
                         const DenseInverseTracker* tracker) {
    if (model.sg.kind() == Semigroup::Kind::diagonal) {
        return model.sg.inverse_matrix(t, cap);
    }
    return tracker->value;
}

}  // namespace

FlowBundle solve_first_variation(const ModelSpec& model, const SolutionPath& X,
                                 const BrownianPath& path) {
    if (path.m != model.m())
        throw DimensionError("first variation: path noise dimension != m");
    const TimeGrid& grid = path.grid;
    const int n = model.n();
    FlowBundle bundle;
    bundle.grid = grid;
    bundle.Y.resize(static_cast<std::size_t>(grid.steps) + 1);
    bundle.V.resize(static_cast<std::size_t>(grid.steps) + 1);

    Mat semi = model.sg.matrix(grid.dt);
    bundle.Y[0] = Mat::Identity(n, n);
    bundle.V[0] = Mat::Zero(n, n);
    for (int j = 0; j < grid.steps; ++j) {
        Mat G = step_factor(model, X.at(j), grid.dt, path.increments.row(j));
        bundle.Y[static_cast<std::size_t>(j) + 1] = semi * (G * bundle.Y[static_cast<std::size_t>(j)]);
        bundle.V[static_cast<std::size_t>(j) + 1] =
            bundle.Y[static_cast<std::size_t>(j) + 1] - model.sg.matrix(grid.node(j + 1));
    }
    return bundle;
}

void solve_right_inverse(const ModelSpec& model, const SolutionPath& X, const BrownianPath& path,
                         Formulation formulation, FlowBundle& bundle, double overflow_cap) {
    if (path.m != model.m())
        throw DimensionError("right inverse: path noise dimension != m");
    if (formulation == Formulation::conjugated && model.sg.kind() != Semigroup::Kind::diagonal)
        throw Error("right inverse: conjugated formulation requires a diagonal semigroup");

    const TimeGrid& grid = path.grid;
    const int n = model.n();
    bundle.formulation = formulation;
    bundle.P.resize(static_cast<std::size_t>(grid.steps) + 1);
    bundle.R.resize(static_cast<std::size_t>(grid.steps) + 1);
    bundle.Z.resize(static_cast<std::size_t>(grid.steps) + 1);

    const bool diagonal = model.sg.kind() == Semigroup::Kind::diagonal;
    Mat semi = model.sg.matrix(grid.dt);
    std::unique_ptr<DenseInverseTracker> tracker;
    if (!diagonal) {
        tracker = std::make_unique<DenseInverseTracker>(model.sg, grid.dt, overflow_cap);
    }

    bundle.P[0] = Mat::Identity(n, n);
    bundle.R[0] = Mat::Identity(n, n);
    bundle.Z[0] = Mat::Identity(n, n);
    bundle.p_valid_nodes = grid.steps + 1;

    if (formulation == Formulation::conjugated) {
        // R_{j+1} = R_j e^{-t_j A} H_j e^{t_j A}; P_{j+1} = e^{-t_{j+1} A} Y_{j+1}
        // via the same conjugation of G_j.  Every node applies the capped
        // inverse exponential explicitly; a cap hit is fatal here because the
        // R recursion itself cannot continue without the conjugation.
        for (int j = 0; j < grid.steps; ++j) {
            double t_j = grid.node(j);
            Mat inv_j = model.sg.inverse_matrix(t_j, overflow_cap);
            Mat fwd_j = model.sg.matrix(t_j);
            Mat H = inverse_step_factor(model, X.at(j), grid.dt, path.increments.row(j));
            Mat G = step_factor(model, X.at(j), grid.dt, path.increments.row(j));
            std::size_t sj = static_cast<std::size_t>(j);
            bundle.R[sj + 1] = bundle.R[sj] * (inv_j * H * fwd_j);
            bundle.P[sj + 1] = (inv_j * G * fwd_j) * bundle.P[sj];
            Mat inv_next = model.sg.inverse_matrix(grid.node(j + 1), overflow_cap);
            bundle.Z[sj + 1] = bundle.R[sj + 1] * inv_next;
        }
        return;
    }

    // Direct: Z_{j+1} = Z_j H_j e^{-dt A} with the exact one-step factor on
    // the right, and R_j recovered as Z_j e^{t_j A}.  Neither forms a large
    // inverse.  P keeps its own accumulation and simply stops at the cap.
    Mat semi_inv_step;
    if (diagonal) {
        semi_inv_step = model.sg.inverse_matrix(grid.dt, overflow_cap);
    } else {
        semi_inv_step = tracker->step;
    }
    bool p_alive = true;
    for (int j = 0; j < grid.steps; ++j) {
        std::size_t sj = static_cast<std::size_t>(j);
        Mat H = inverse_step_factor(model, X.at(j), grid.dt, path.increments.row(j));
        bundle.Z[sj + 1] = bundle.Z[sj] * H * semi_inv_step;
        bundle.R[sj + 1] = bundle.Z[sj + 1] * model.sg.matrix(grid.node(j + 1));
        if (!p_alive) continue;
        try {
            if (!diagonal) tracker->advance();
            Mat inv_next =
                inverse_semigroup_at(model, grid.node(j + 1), overflow_cap, tracker.get());
            // P_{j+1} = e^{-t_{j+1} A} Y_{j+1}; the G factor is recomputed so
            // the two halves of the bundle stay independent of each other.
            Mat G = step_factor(model, X.at(j), grid.dt, path.increments.row(j));
            Mat semi_j = model.sg.matrix(grid.node(j));
            bundle.P[sj + 1] = inv_next * (semi * (G * (semi_j * bundle.P[sj])));
        } catch (const OverflowCapError&) {
            p_alive = false;
            bundle.p_valid_nodes = j + 1;
        }
    }
}

FlowBundle solve_flows(const ModelSpec& model, const SolutionPath& X, const BrownianPath& path,
                       Formulation formulation, double overflow_cap) {
    FlowBundle bundle = solve_first_variation(model, X, path);
    solve_right_inverse(model, X, path, formulation, bundle, overflow_cap);
    return bundle;
}

std::vector<double> residual_q(const FlowBundle& bundle) {
    if (bundle.P.empty() || bundle.R.empty() || bundle.p_valid_nodes <= 0)
        throw Error("residual_q: bundle has no right-inverse data");
    std::vector<double> out(static_cast<std::size_t>(bundle.p_valid_nodes));
    const Eigen::Index n = bundle.P.front().rows();
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = (bundle.P[j] * bundle.R[j] - Mat::Identity(n, n)).norm();
    }
    return out;
}

double range_residual(const ModelSpec& model, const FlowBundle& bundle, const Vec& v) {
    if (bundle.Y.empty() || bundle.Z.empty())
        throw Error("range_residual: bundle lacks Y or Z");
    double worst = 0.0;
    for (std::size_t j = 0; j < bundle.Y.size(); ++j) {
        double t = bundle.grid.node(static_cast<int>(j));
        Vec w = model.sg.apply(t, v);
        Vec err = bundle.Y[j] * (bundle.Z[j] * w) - w;
        worst = std::max(worst, e_norm(model.cfg, err));
    }
    return worst;
}

}  // namespace hypolab
