#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "hypolab/density.hpp"
#include "hypolab/models.hpp"

namespace hypolab {

using Json = nlohmann::json;

/// Gate thresholds; every one of these can be overridden from the config
/// file under "tolerances".
struct Tolerances {
    double fd_rel = 5e-3;               // first variation vs bumped trajectory
    double q_residual = 2e-3;           // max ||P R - I||_F
    double formulation_agreement = 1e-6;
    double route_rel = 1e-2;            // derivative route agreement at T
    double chain_rule = 1e-12;
    double quad_form = 1e-10;           // quadratic form identity, relative
    double semimartingale = 5e-2;
    double eig_floor = 1e-6;
    double kde_l1 = 0.1;
    double atom_tol = 1e-9;
    double atom_fraction = 0.05;
    double rank_tol = 1e-8;
};

/// Fully resolved experiment description.  Defaults are chosen so that every
/// subcommand runs out of the box on each built-in model.
struct ExperimentConfig {
    std::string model_name = "heat_mult";
    std::optional<Json> inline_model;   // alternative to model_name

    double horizon = 0.0;               // 0 -> model default
    int steps = 0;                      // 0 -> derived from dt or 1000
    double dt = 0.0;                    // 0 -> derived from steps

    std::uint64_t seed = 20240814;
    int paths = 8;                      // trajectories written by `simulate`
    int samples = 10000;                // density sample count
    int gamma_paths = 100;
    int picard_iterations = 6;
    int picard_paths = 200;
    int refinements = 3;
    double r_fraction = 0.5;            // derivative time r = r_fraction * T
    int bracket_depth = 2;
    std::optional<Mat> functional;      // F; identity when absent
    std::optional<int> expected_rank;
    std::string formulation = "auto";   // auto | conjugated | direct
    double overflow_cap = Semigroup::kDefaultOverflowCap;
    int kde_grid = 512;
    Tolerances tol;

    std::string outdir = "out";
    std::string label;                  // empty -> timestamp at run time

    /// Materializes the model (zoo lookup or inline polynomial model).
    ModelSpec make_model() const;

    /// Grid with defaults resolved against the model's horizon.
    TimeGrid make_grid(const ModelSpec& model) const;

    /// F resolved to a concrete matrix (identity by default).
    Mat make_functional(const ModelSpec& model) const;

    /// Formulation resolved against the model and cap ("auto" picks
    /// conjugated when the whole horizon stays under the cap).
    Formulation resolve_formulation(const ModelSpec& model, const TimeGrid& grid) const;

    /// Round-trippable JSON with every default filled in.
    Json to_json() const;
};

/// Parses a config file (JSON, // and /* */ comments allowed).  Unknown keys
/// and type mismatches are rejected with a ConfigError naming the JSON
/// pointer and, where possible, the line in the file.  A manifest produced by
/// the command line tool (with top-level "command"/"config" keys) is accepted
/// and unwrapped.
ExperimentConfig load_config_file(const std::string& path);

/// Same, from an already-parsed document (no line hints available).
ExperimentConfig config_from_json(const Json& doc);

/// Builds a polynomial model from an inline JSON description.
ModelSpec model_from_json(const Json& doc);

}  // namespace hypolab
