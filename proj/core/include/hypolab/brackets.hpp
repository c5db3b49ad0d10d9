#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hypolab/flows.hpp"
#include "hypolab/models.hpp"

namespace hypolab {

/// Lie bracket with the convention
///     [V1, V2](x) = V2'(x) V1(x) - V1'(x) V2(x).
Vec lie_bracket(const VectorField& V1, const VectorField& V2, const Vec& x);

/// [V1, V2] as a field.  When both arguments carry analytic first and second
/// derivatives the bracket's Jacobian is assembled analytically as well, so
/// nested brackets keep full accuracy to that depth.
VectorField bracket_field(const VectorField& V1, const VectorField& V2);

/// Drift-corrected bracket in closed form:
///     [[V]](x) = [b, V](x)
///              + sum_k ( -sigma_k'(V' sigma_k) + 1/2 V''(sigma_k, sigma_k)
///                        + sigma_k'(sigma_k' V) )(x)
/// with b(x) = A x + alpha(x); equal to
/// [sigma_0, V] + 1/2 sum_k [sigma_k, [sigma_k, V]] but cheaper and without
/// nested numerical differentiation.
Vec corrected_bracket(const ModelSpec& model, const VectorField& V, const Vec& x);
VectorField corrected_field(const ModelSpec& model, const VectorField& V);

/// Literal nesting of plain brackets; reference implementation used to check
/// the closed form (derivatives of sigma_0 are taken numerically).
Vec corrected_bracket_nested(const ModelSpec& model, const VectorField& V, const Vec& x);

/// Bracket expressions over the generators s1..sm (the diffusion columns)
/// with two constructors: plain brackets [sk, V] and the drift-corrected
/// bracket corr(V).  Immutable trees shared by pointer.
struct BracketExpr {
    using Ptr = std::shared_ptr<const BracketExpr>;
    enum class Tag { generator, bracket, corrected };

    Tag tag = Tag::generator;
    int index = 0;   // generator number, 1-based (s0 never appears alone)
    Ptr left;        // bracket: left argument; corrected: the argument
    Ptr right;       // bracket: right argument

    static Ptr generator(int k);
    static Ptr bracket(Ptr a, Ptr b);
    static Ptr corrected(Ptr v);

    int depth() const;
    std::string render() const;      // e.g. "[s1,corr(s1)]"
    bool equal(const BracketExpr& other) const;
};

/// Level sets of the bracket hierarchy:
///   level 0: s1..sm
///   level d+1: [sk, V] for k=1..m and corr(V), V in level d,
/// with self-brackets [sk, sk] pruned, duplicates (by tree shape) dropped,
/// and a hard cap on the total count.
std::vector<std::vector<BracketExpr::Ptr>> generate_levels(int m, int depth,
                                                           std::size_t cap = 500);

/// Flattened view of generate_levels.
std::vector<BracketExpr::Ptr> generate_sets(int m, int depth, std::size_t cap = 500);

/// Evaluates an expression as a vector field on the model.
VectorField realize(const ModelSpec& model, const BracketExpr::Ptr& expr);

/// Span test at a point.
struct SpanReport {
    Vec point;
    int dimension = 0;
    int depth_requested = 0;
    int depth_used = 0;          // early stop once the span is full
    double tolerance = 0.0;
    std::vector<std::pair<std::string, Vec>> vectors;  // (rendered expr, value)
    Vec singular_values;
    int rank = 0;
};

/// Evaluates the hierarchy at x level by level, stacking values as rows and
/// computing the numerical rank (singular values >= tol * largest).  Stops
/// generating further levels once the rank reaches n.
SpanReport hormander_rank(const ModelSpec& model, const Vec& x, int depth, double tol = 1e-8,
                          std::size_t cap = 500);

/// Residual of the pathwise bracket identity
///     Z_t V(X_t) = V(x0) + sum_k int_0^t Z_r [sigma_k, V](X_r) dW^k_r
///                + int_0^t Z_r [[V]](X_r) dr
/// discretized with left endpoints on the bundle's grid.  Returns the
/// e-norm residual per node; the max is the headline number.
std::vector<double> semimartingale_check(const ModelSpec& model, const SolutionPath& X,
                                         const FlowBundle& flows, const BrownianPath& path,
                                         const VectorField& V);

}  // namespace hypolab
