#pragma once

#include <cstdint>
#include <vector>

#include "hypolab/models.hpp"

namespace hypolab {

/// Discrete trajectory on a time grid; states.row(j) is the state at node j.
struct SolutionPath {
    TimeGrid grid;
    Mat states;  // (grid.steps + 1) x n

    int nodes() const { return grid.steps + 1; }
    Vec at(int j) const { return states.row(j).transpose(); }
};

/// Exponential Euler step for the mild formulation:
///     X_{j+1} = e^{dt A} (X_j + alpha(X_j) dt + sigma(X_j) dW_j).
/// Throws BlowUpError at the first node with a non-finite entry.
SolutionPath solve_mild(const ModelSpec& model, const BrownianPath& path,
                        long long path_id = -1);

/// One application of the discrete fixed-point map
///     Gamma(X)_j = e^{t_j A} x0
///                + sum_{i<j} e^{(t_j - t_i) A} (alpha(X_i) dt + sigma(X_i) dW_i),
/// evaluated by the telescoped recursion
///     Gamma(X)_{j+1} = e^{dt A} (Gamma(X)_j + alpha(X_j) dt + sigma(X_j) dW_j),
/// which performs the same floating-point operations as solve_mild when the
/// candidate is the solver's own output, making the fixed point exact bitwise.
SolutionPath picard_map(const ModelSpec& model, const SolutionPath& candidate,
                        const BrownianPath& path);

/// Contraction diagnostic for the fixed-point iteration started at the
/// constant candidate X^(0) == x0.
struct PicardDiagnostic {
    /// deltas[k-1] = sup over grid nodes of the Monte Carlo mean of
    /// |X^(k) - X^(k-1)|_E^2, k = 1..n_iter (common noise across iterates).
    std::vector<double> deltas;
    /// ratios[k-1] = deltas[k] / deltas[k-1]; factorial decay shows up as a
    /// strictly decreasing sequence.
    std::vector<double> ratios;
};

PicardDiagnostic picard_diagnostic(const ModelSpec& model, const TimeGrid& grid, int n_iter,
                                   int n_paths, std::uint64_t seed);

}  // namespace hypolab
