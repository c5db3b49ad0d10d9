#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "hypolab/linalg.hpp"

namespace hypolab {

/// Finite-dimensional stand-ins for the state space E and the noise space H.
/// The truncated state space is R^n carrying the weighted norm
///     |v|_E = sqrt(sum_i (e_weights[i] * v[i])^2),
/// the noise space is R^m with h_weights the analogous diagonal weights, and
/// embed_constant records the norm of the (here: diagonal) embedding used when
/// comparing the two scales.
struct TruncationConfig {
    int n = 0;
    int m = 0;
    Vec e_weights;               // length n, strictly positive
    Vec h_weights;               // length m, strictly positive
    double embed_constant = 1.0;

    static TruncationConfig unit(int n, int m);

    /// Throws ConfigError if any weight is non-positive or a length is wrong.
    void validate() const;
};

/// Weighted state-space norm |v|_E.
double e_norm(const TruncationConfig& cfg, const Vec& v);

/// Weighted noise-space norm |h|_H.
double h_norm(const TruncationConfig& cfg, const Vec& v);

/// Hilbert-Schmidt-type norm of an n x m map H -> E:
///     ||M||^2 = sum_k |M h_k|_E^2 / h_weights[k]^2
/// where h_k is the k-th coordinate vector, i.e. columns are measured in the
/// E norm against an h-orthonormal system.
double hs_norm(const TruncationConfig& cfg, const Mat& M);

/// E -> E operator norm induced by the weighted norms (via a similarity
/// transform and a spectral norm).
double operator_norm_e(const TruncationConfig& cfg, const Mat& M);

/// Uniform time grid on [0, horizon] with `steps` intervals.
struct TimeGrid {
    double horizon = 0.0;
    int steps = 0;
    double dt = 0.0;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps);

    double node(int j) const { return dt * static_cast<double>(j); }

    /// Grid with the same horizon and `factor` times fewer intervals.
    /// Requires steps % factor == 0.
    TimeGrid coarsened(int factor) const;
};

/// Strongly continuous semigroup e^{tA} on the truncated state space.
///
/// Two kinds are supported: `diagonal` (A = diag(spectrum), the generic case
/// for a truncation along an eigenbasis) and `dense` (an arbitrary generator
/// matrix; the exponential uses scaling-and-squaring and is cached per time).
/// Copies share the dense cache; the cache is guarded for concurrent readers.
class Semigroup {
public:
    enum class Kind { diagonal, dense };

    static Semigroup diagonal(Vec spectrum);
    static Semigroup dense(Mat generator);

    Kind kind() const { return kind_; }
    int dim() const { return static_cast<int>(generator_.rows()); }

    /// The generator A as a matrix (diagonal kinds included).
    const Mat& generator() const { return generator_; }

    /// Diagonal kinds only: the eigenvalues.
    const Vec& spectrum() const;

    /// e^{tA} v for t >= 0.
    Vec apply(double t, const Vec& v) const;

    /// e^{tA} as a matrix, t >= 0.  Dense results are cached per t.
    Mat matrix(double t) const;

    /// e^{-tA} v for t >= 0.  Diagonal kinds only; throws OverflowCapError
    /// when |t * lambda_k| > overflow_cap for some k, since the inverse
    /// direction grows like e^{t |lambda|} and silently overflows otherwise.
    Vec apply_inverse(double t, const Vec& v, double overflow_cap = kDefaultOverflowCap) const;

    /// e^{-tA} as a matrix with the same restrictions as apply_inverse.
    Mat inverse_matrix(double t, double overflow_cap = kDefaultOverflowCap) const;

    static constexpr double kDefaultOverflowCap = 40.0;

private:
    Semigroup() = default;

    struct DenseCache {
        std::mutex mutex;
        std::map<double, Mat> exp_by_time;
    };

    Kind kind_ = Kind::diagonal;
    Vec spectrum_;    // diagonal kinds
    Mat generator_;   // always set
    std::shared_ptr<DenseCache> cache_;  // dense kinds
};

}  // namespace hypolab
