#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/brackets.hpp"
#include "hypolab/malliavin.hpp"

namespace hypolab {

/// Terminal-time samples of F X_T.
struct SampleSet {
    Mat samples;              // n_ok x k, one row per surviving path
    std::uint64_t seed = 0;
    int requested = 0;
    int blowups = 0;          // paths dropped for leaving the representable range
    std::string model_name;
};

/// Simulates `n_samples` independent paths (stream ids 0..n_samples-1) and
/// collects F X_T.  Throws BlowUpError when more than `max_blowup_fraction`
/// of the paths explode; below that they are dropped and counted.
SampleSet monte_carlo(const ModelSpec& model, const TimeGrid& grid, const Mat& F, int n_samples,
                      std::uint64_t seed, double max_blowup_fraction = 0.01);

/// Rule-of-thumb bandwidth 0.9 min(std, IQR/1.34) N^{-1/5} for a 1-d sample.
/// Returns 0 when the sample has no spread (atom case).
double silverman_bandwidth(const Vec& samples);

/// Gaussian product-kernel density estimate evaluated at the given points.
/// samples: N x k with k <= 2; points: G x k.  Plain O(N G) sums.
Vec kde(const Mat& samples, double bandwidth, const Mat& points);

/// Atom detection: a cluster of at least `min_fraction` of the samples lying
/// within `tol` * spread of each other (max-norm; spread is the largest
/// coordinate range) is flagged as an atom.
struct AtomReport {
    bool flag = false;
    std::vector<Vec> locations;    // cluster representatives
    double largest_fraction = 0.0;
};

AtomReport atom_test(const Mat& samples, double tol = 1e-9, double min_fraction = 0.05);

/// KDE stability ladder for one coordinate: base Silverman bandwidth h0 and
/// the L1 distances between successive halvings on a shared grid.
struct KdeLadder {
    int coordinate = 0;
    double bandwidth = 0.0;        // h0
    Vec grid;                       // evaluation points
    Vec density_h;                  // f_{h0}
    Vec density_h2;                 // f_{h0/2}
    Vec density_h4;                 // f_{h0/4}
    double l1_h_h2 = 0.0;
    double l1_h2_h4 = 0.0;
};

/// Builds the ladder for column `coordinate` of the sample matrix.
KdeLadder kde_ladder(const Mat& samples, int coordinate, int grid_points = 512);

/// End-to-end smoothness diagnostic.
struct DensityReport {
    std::string model_name;
    int n_samples = 0;
    int blowups = 0;
    int k = 0;                     // rows of F

    SpanReport span;               // bracket span at the initial point
    bool rank_full = false;

    std::vector<double> gamma_min_eigs;   // per sampled path, sorted
    double gamma_p10 = 0.0, gamma_median = 0.0, gamma_p90 = 0.0;
    bool gamma_nondegenerate = false;     // median above the floor

    AtomReport atoms;                     // joint-sample clusters
    std::vector<AtomReport> marginal_atoms;  // per coordinate; an atomic
                                             // marginal already rules out a
                                             // joint density
    bool any_atom = false;
    std::vector<KdeLadder> ladders;       // per non-atomic coordinate
    double l1_max = 0.0;                  // max over computed ladders of l1_h_h2

    bool expect_density = false;          // rank_full && gamma_nondegenerate
    std::string observed;                 // "atom" | "smooth" | "inconclusive"
    bool consistent = false;
    std::vector<std::string> chain;       // human-readable implication chain
};

struct VerdictOptions {
    int bracket_depth = 2;
    double rank_tol = 1e-8;
    int gamma_paths = 100;
    double eig_floor = 1e-6;
    double atom_tol = 1e-9;
    double atom_fraction = 0.05;
    double kde_l1_max = 0.1;
    int kde_grid = 512;
    Formulation formulation = Formulation::conjugated;
    double overflow_cap = Semigroup::kDefaultOverflowCap;
};

/// Runs the whole chain: samples, bracket span at the initial point, the
/// reduced covariance spectrum over gamma_paths trajectories, atom test, and
/// (absent atoms) marginal KDE ladders.  `consistent` records whether the
/// observations match what the span + spectrum predict.
DensityReport density_verdict(const ModelSpec& model, const TimeGrid& grid, const Mat& F,
                              int n_samples, std::uint64_t seed, const VerdictOptions& options);

}  // namespace hypolab
