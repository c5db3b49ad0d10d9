#pragma once

#include <vector>

#include "hypolab/solver.hpp"

namespace hypolab {

/// How the right-inverse flow treats the semigroup direction.
///
/// `conjugated` integrates R_t = Z_t e^{t A} with coefficients conjugated by
/// e^{-t A} (diagonal semigroups only; every node pays two capped inverse
/// applications).  `direct` steps Z itself and multiplies the exact one-step
/// factor e^{-dt A} on the right, which never forms a large inverse.  The two
/// recursions are algebraically identical step by step, so their disagreement
/// measures accumulated rounding of the conjugation, not discretization.
enum class Formulation { conjugated, direct };

const char* to_string(Formulation f);

/// Flows attached to one trajectory.  All entries are n x n per node:
///   Y - first variation dX_t/dx,
///   V - Y_t - e^{t A}, the part of Y beyond the semigroup,
///   P - e^{-t A} Y_t    (solves a conjugated equation of its own),
///   R - Z_t e^{t A},
///   Z - right inverse candidate: Y_t Z_t == I + O(dt) on the range.
struct FlowBundle {
    TimeGrid grid;
    Formulation formulation = Formulation::conjugated;
    std::vector<Mat> Y;
    std::vector<Mat> V;
    std::vector<Mat> P;
    std::vector<Mat> R;
    std::vector<Mat> Z;
    /// Number of leading nodes where P is defined.  P carries an e^{+t|A|}
    /// factor by definition, so in the direct formulation it is filled only
    /// until the overflow cap would be hit; Z and R remain valid throughout.
    int p_valid_nodes = 0;
};

/// Integrates dY = (A + alpha'(X)) Y dt + sum_k sigma_k'(X) Y dW^k with the
/// same exponential treatment of A as the state solver.  Fills Y and V.
FlowBundle solve_first_variation(const ModelSpec& model, const SolutionPath& X,
                                 const BrownianPath& path);

/// Fills P, R, Z on top of an existing bundle (Y must already be present when
/// formulation == direct only for dimension checks; P is computed from its
/// own recursion either way).  overflow_cap guards e^{+t|lambda|} factors.
void solve_right_inverse(const ModelSpec& model, const SolutionPath& X, const BrownianPath& path,
                         Formulation formulation, FlowBundle& bundle,
                         double overflow_cap = Semigroup::kDefaultOverflowCap);

/// Convenience: first variation plus right inverse in one bundle.
FlowBundle solve_flows(const ModelSpec& model, const SolutionPath& X, const BrownianPath& path,
                       Formulation formulation,
                       double overflow_cap = Semigroup::kDefaultOverflowCap);

/// ||P_j R_j - I||_F per node: the quality of the right-inverse construction,
/// measured on the conjugated pair where no e^{t A} amplification enters.
std::vector<double> residual_q(const FlowBundle& bundle);

/// max_j |Y_j Z_j e^{t_j A} v - e^{t_j A} v|_E for a probe direction v:
/// Z is a right inverse of Y only on the range of the semigroup.
double range_residual(const ModelSpec& model, const FlowBundle& bundle, const Vec& v);

}  // namespace hypolab
