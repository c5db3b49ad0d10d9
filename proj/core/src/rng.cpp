#include "hypolab/rng.hpp"

#include <cmath>
#include <numbers>

namespace hypolab {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
    // splitmix64 finalizer applied to seed, then to seed ^ mixed(stream).
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ mix(stream_id + 0x632be59bd9b4e019ULL));
}

double GaussianStream::uniform() {
    // Top 53 bits of the engine output, uniform on [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0, 1] x [0, 1): u1 = 1 - uniform() keeps log's argument
    // away from zero.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

BrownianPath BrownianPath::coarsened(int factor) const {
    TimeGrid coarse = grid.coarsened(factor);
    BrownianPath out;
    out.grid = coarse;
    out.m = m;
    out.seed = seed;
    out.stream_id = stream_id;
    out.increments = Mat::Zero(coarse.steps, m);
    for (int j = 0; j < coarse.steps; ++j) {
        out.increments.row(j) = increments.middleRows(j * factor, factor).colwise().sum();
    }
    return out;
}

BrownianPath sample_brownian(std::uint64_t seed, std::uint64_t stream_id, const TimeGrid& grid,
                             int m) {
    if (m <= 0) throw ConfigError("sample_brownian: m must be positive");
    BrownianPath path;
    path.grid = grid;
    path.m = m;
    path.seed = seed;
    path.stream_id = stream_id;
    path.increments.resize(grid.steps, m);
    GaussianStream stream(seed, stream_id);
    double scale = std::sqrt(grid.dt);
    for (int j = 0; j < grid.steps; ++j) {
        for (int k = 0; k < m; ++k) {
            path.increments(j, k) = scale * stream.normal();
        }
    }
    return path;
}

}  // namespace hypolab
