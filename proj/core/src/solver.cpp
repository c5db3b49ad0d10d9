#include "hypolab/solver.hpp"

#include <algorithm>
#include <string>

namespace hypolab {

namespace {

// One exponential Euler step with the accumulator and the coefficient point
// passed separately: solve_mild uses state == coeff_point, picard_map freezes
// coeff_point at the candidate.  Sharing this helper makes the fixed-point
// property of picard_map hold bitwise, not just approximately.
Vec step(const ModelSpec& model, const Mat& semi, const Vec& state, const Vec& coeff_point,
         double dt, const Eigen::Ref<const Eigen::RowVectorXd>& dW) {
    Vec inner = state + model.drift.eval(coeff_point) * dt;
    const auto& columns = model.diffusion.columns;
    for (int k = 0; k < model.m(); ++k) {
        inner += columns[static_cast<std::size_t>(k)].eval(coeff_point) * dW[k];
    }
    if (model.sg.kind() == Semigroup::Kind::diagonal) {
        return Vec(semi.diagonal().array() * inner.array());
    }
    return semi * inner;
}

void check_finite(const Vec& x, int node, long long path_id) {
    if (!x.allFinite()) {
        throw BlowUpError("trajectory left the representable range at node " +
                              std::to_string(node),
                          static_cast<std::size_t>(node), path_id);
    }
}

}  // namespace

SolutionPath solve_mild(const ModelSpec& model, const BrownianPath& path, long long path_id) {
    if (path.m != model.m()) throw DimensionError("solve_mild: path noise dimension != m");
    const TimeGrid& grid = path.grid;
    SolutionPath out;
    out.grid = grid;
    out.states.resize(grid.steps + 1, model.n());
    Mat semi = model.sg.matrix(grid.dt);
    Vec x = model.initial_x;
    out.states.row(0) = x.transpose();
    for (int j = 0; j < grid.steps; ++j) {
        x = step(model, semi, x, x, grid.dt, path.increments.row(j));
        check_finite(x, j + 1, path_id);
        out.states.row(j + 1) = x.transpose();
    }
    return out;
}

SolutionPath picard_map(const ModelSpec& model, const SolutionPath& candidate,
                        const BrownianPath& path) {
    if (path.m != model.m()) throw DimensionError("picard_map: path noise dimension != m");
    if (candidate.states.rows() != path.grid.steps + 1 || candidate.states.cols() != model.n())
        throw DimensionError("picard_map: candidate shape does not match grid/model");
    const TimeGrid& grid = path.grid;
    SolutionPath out;
    out.grid = grid;
    out.states.resize(grid.steps + 1, model.n());
    Mat semi = model.sg.matrix(grid.dt);
    Vec acc = model.initial_x;
    out.states.row(0) = acc.transpose();
    for (int j = 0; j < grid.steps; ++j) {
        acc = step(model, semi, acc, candidate.at(j), grid.dt, path.increments.row(j));
        out.states.row(j + 1) = acc.transpose();
    }
    return out;
}

PicardDiagnostic picard_diagnostic(const ModelSpec& model, const TimeGrid& grid, int n_iter,
                                   int n_paths, std::uint64_t seed) {
    if (n_iter < 1) throw ConfigError("picard_diagnostic: n_iter must be >= 1");
    if (n_paths < 1) throw ConfigError("picard_diagnostic: n_paths must be >= 1");

    PicardDiagnostic diag;
    // Sum over paths of |X^(k)_j - X^(k-1)_j|_E^2, indexed [k-1][j].
    std::vector<std::vector<double>> accum(
        static_cast<std::size_t>(n_iter),
        std::vector<double>(static_cast<std::size_t>(grid.steps + 1), 0.0));

    for (int p = 0; p < n_paths; ++p) {
        BrownianPath path = sample_brownian(seed, static_cast<std::uint64_t>(p), grid, model.m());
        SolutionPath prev;
        prev.grid = grid;
        prev.states = model.initial_x.transpose().replicate(grid.steps + 1, 1);
        for (int k = 1; k <= n_iter; ++k) {
            SolutionPath next = picard_map(model, prev, path);
            for (int j = 0; j <= grid.steps; ++j) {
                double d = e_norm(model.cfg, Vec(next.at(j) - prev.at(j)));
                accum[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j)] += d * d;
            }
            prev = std::move(next);
        }
    }

    diag.deltas.resize(static_cast<std::size_t>(n_iter));
    for (int k = 0; k < n_iter; ++k) {
        double sup = 0.0;
        for (double v : accum[static_cast<std::size_t>(k)]) {
            sup = std::max(sup, v / static_cast<double>(n_paths));
        }
        diag.deltas[static_cast<std::size_t>(k)] = sup;
    }
    for (int k = 1; k < n_iter; ++k) {
        diag.ratios.push_back(diag.deltas[static_cast<std::size_t>(k)] /
                              diag.deltas[static_cast<std::size_t>(k - 1)]);
    }
    return diag;
}

}  // namespace hypolab
