#pragma once

#include <cstdint>
#include <random>

#include "hypolab/spaces.hpp"

namespace hypolab {

/// Mixes a master seed with a stream id into an engine seed.  Distinct
/// (seed, stream) pairs get decorrelated engines; the mix is a fixed integer
/// permutation (splitmix64 steps), so streams are reproducible everywhere.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id);

/// Deterministic standard-normal stream.
///
/// mt19937_64 supplies the raw integers (its output sequence is pinned down by
/// the standard) and a fixed Box-Muller transform maps them to normals, so a
/// given (seed, stream_id) yields the same draws regardless of the standard
/// library's own distribution implementations.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream_id)
        : engine_(mix_seed(seed, stream_id)) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform();

    /// Standard normal draw.
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Discretized m-dimensional Brownian path: increments(j, k) ~ N(0, dt) is the
/// k-th component increment over [t_j, t_{j+1}).  Row-major in time so that a
/// path can be coarsened by summing blocks of rows.
struct BrownianPath {
    TimeGrid grid;
    int m = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    Mat increments;  // grid.steps x m

    /// Path on the grid with `factor` times fewer intervals, obtained by
    /// summing consecutive increments.  The coarse path is the restriction of
    /// the same Brownian trajectory, which couples refinement levels exactly.
    BrownianPath coarsened(int factor) const;
};

/// Samples increments in row-major (time-major) order from
/// GaussianStream(seed, stream_id); the draw order is part of the contract.
BrownianPath sample_brownian(std::uint64_t seed, std::uint64_t stream_id, const TimeGrid& grid,
                             int m);

}  // namespace hypolab
