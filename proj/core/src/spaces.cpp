#include "hypolab/spaces.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace hypolab {

TruncationConfig TruncationConfig::unit(int n, int m) {
    TruncationConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.e_weights = Vec::Ones(n);
    cfg.h_weights = Vec::Ones(m);
    cfg.embed_constant = 1.0;
    return cfg;
}

void TruncationConfig::validate() const {
    if (n <= 0 || m <= 0) throw ConfigError("truncation: n and m must be positive");
    if (e_weights.size() != n) throw ConfigError("truncation: e_weights must have length n");
    if (h_weights.size() != m) throw ConfigError("truncation: h_weights must have length m");
    if ((e_weights.array() <= 0.0).any())
        throw ConfigError("truncation: e_weights must be strictly positive");
    if ((h_weights.array() <= 0.0).any())
        throw ConfigError("truncation: h_weights must be strictly positive");
    if (!(embed_constant > 0.0)) throw ConfigError("truncation: embed_constant must be positive");
}

double e_norm(const TruncationConfig& cfg, const Vec& v) {
    require_dim(v, cfg.n, "e_norm");
    return (cfg.e_weights.array() * v.array()).matrix().norm();
}

double h_norm(const TruncationConfig& cfg, const Vec& v) {
    require_dim(v, cfg.m, "h_norm");
    return (cfg.h_weights.array() * v.array()).matrix().norm();
}

double hs_norm(const TruncationConfig& cfg, const Mat& M) {
    require_dim(M, cfg.n, cfg.m, "hs_norm");
    double acc = 0.0;
    for (int k = 0; k < cfg.m; ++k) {
        double column = (cfg.e_weights.array() * M.col(k).array()).matrix().norm();
        double scaled = column / cfg.h_weights[k];
        acc += scaled * scaled;
    }
    return std::sqrt(acc);
}

double operator_norm_e(const TruncationConfig& cfg, const Mat& M) {
    require_dim(M, cfg.n, cfg.n, "operator_norm_e");
    // |Mv|_E / |v|_E = |W M W^{-1} u|_2 / |u|_2 with W = diag(e_weights).
    Mat similar = cfg.e_weights.asDiagonal() * M *
                  cfg.e_weights.cwiseInverse().asDiagonal();
    return similar.jacobiSvd().singularValues()(0);
}

TimeGrid::TimeGrid(double horizon, int steps) : horizon(horizon), steps(steps) {
    if (!(horizon > 0.0)) throw ConfigError("time grid: horizon must be positive");
    if (steps <= 0) throw ConfigError("time grid: steps must be positive");
    dt = horizon / static_cast<double>(steps);
}

TimeGrid TimeGrid::coarsened(int factor) const {
    if (factor <= 0 || steps % factor != 0)
        throw ConfigError("time grid: coarsening factor must divide steps");
    return TimeGrid(horizon, steps / factor);
}

Semigroup Semigroup::diagonal(Vec spectrum) {
    if (spectrum.size() == 0) throw ConfigError("semigroup: empty spectrum");
    Semigroup sg;
    sg.kind_ = Kind::diagonal;
    sg.generator_ = Mat(spectrum.asDiagonal());
    sg.spectrum_ = std::move(spectrum);
    return sg;
}

Semigroup Semigroup::dense(Mat generator) {
    if (generator.rows() == 0 || generator.rows() != generator.cols())
        throw ConfigError("semigroup: generator must be square and non-empty");
    Semigroup sg;
    sg.kind_ = Kind::dense;
    sg.generator_ = std::move(generator);
    sg.cache_ = std::make_shared<DenseCache>();
    return sg;
}

const Vec& Semigroup::spectrum() const {
    if (kind_ != Kind::diagonal) throw Error("semigroup: spectrum only defined for diagonal kind");
    return spectrum_;
}

Vec Semigroup::apply(double t, const Vec& v) const {
    require_dim(v, generator_.rows(), "semigroup apply");
    if (t < 0.0) throw Error("semigroup: apply requires t >= 0");
    if (kind_ == Kind::diagonal) {
        return (t * spectrum_.array()).exp() * v.array();
    }
    return matrix(t) * v;
}

Mat Semigroup::matrix(double t) const {
    if (t < 0.0) throw Error("semigroup: matrix requires t >= 0");
    if (kind_ == Kind::diagonal) {
        return Mat(Vec((t * spectrum_.array()).exp()).asDiagonal());
    }
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->exp_by_time.find(t);
        if (it != cache_->exp_by_time.end()) return it->second;
    }
    Mat result = Mat(t * generator_).exp();
    std::lock_guard<std::mutex> lock(cache_->mutex);
    return cache_->exp_by_time.emplace(t, std::move(result)).first->second;
}

Vec Semigroup::apply_inverse(double t, const Vec& v, double overflow_cap) const {
    require_dim(v, generator_.rows(), "semigroup apply_inverse");
    return Vec(inverse_matrix(t, overflow_cap).diagonal().array() * v.array());
}

Mat Semigroup::inverse_matrix(double t, double overflow_cap) const {
    if (kind_ != Kind::diagonal)
        throw Error("semigroup: inverse direction only supported for diagonal kind");
    if (t < 0.0) throw Error("semigroup: inverse_matrix requires t >= 0");
    double magnitude = (t * spectrum_.array()).abs().maxCoeff();
    if (magnitude > overflow_cap) {
        throw OverflowCapError(
            "semigroup: |t*lambda| = " + std::to_string(magnitude) + " exceeds cap " +
                std::to_string(overflow_cap) + "; use the direct flow formulation",
            magnitude, overflow_cap);
    }
    return Mat(Vec((-t * spectrum_.array()).exp()).asDiagonal());
}

}  // namespace hypolab
