// Command line front end: each subcommand materializes a model and a grid
// from the config, runs one diagnostic pipeline, and writes
// <outdir>/<command>/<label>/{manifest.json, report.json, *.csv}.
// Exit codes: 0 all gates pass, 1 a gate failed, 2 bad config, 3 runtime
// failure (blow-up, overflow cap, io).

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/brackets.hpp"
#include "hypolab/config.hpp"
#include "hypolab/density.hpp"
#include "hypolab/flows.hpp"
#include "hypolab/malliavin.hpp"
#include "hypolab/report.hpp"
#include "hypolab/version.hpp"

namespace {

using namespace hypolab;

std::string utc_label() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y%m%dT%H%M%SZ", &tm);
    return buffer;
}

struct RunContext {
    ExperimentConfig cfg;
    ModelSpec model;
    TimeGrid grid;
    Mat F;
    Formulation formulation = Formulation::conjugated;
    std::filesystem::path dir;   // <outdir>/<command>/<label>
    bool emit_json = false;
};

RunContext make_context(const ExperimentConfig& cfg, const std::string& command,
                        bool emit_json) {
    RunContext ctx{cfg, cfg.make_model(), TimeGrid(), Mat(), Formulation::conjugated, {}, emit_json};
    ctx.grid = cfg.make_grid(ctx.model);
    ctx.F = cfg.make_functional(ctx.model);
    ctx.formulation = cfg.resolve_formulation(ctx.model, ctx.grid);
    std::string label = cfg.label.empty() ? utc_label() : cfg.label;
    ctx.dir = std::filesystem::path(cfg.outdir) / command / label;
    return ctx;
}

void write_manifest(const RunContext& ctx, const std::string& command) {
    Json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    Json cfg_json = ctx.cfg.to_json();
    cfg_json["label"] = ctx.dir.filename().string();
    manifest["config"] = cfg_json;
    write_text_file((ctx.dir / "manifest.json").string(), render_json(manifest));
}

Json report_header(const RunContext& ctx, const std::string& command) {
    Json doc;
    doc["command"] = command;
    doc["version"] = kVersion;
    Json model;
    model["name"] = ctx.model.name;
    model["n"] = ctx.model.n();
    model["m"] = ctx.model.m();
    doc["model"] = model;
    Json grid;
    grid["horizon"] = ctx.grid.horizon;
    grid["steps"] = ctx.grid.steps;
    grid["dt"] = ctx.grid.dt;
    doc["grid"] = grid;
    doc["seed"] = ctx.cfg.seed;
    doc["formulation"] = to_string(ctx.formulation);
    return doc;
}

int finish(const RunContext& ctx, const std::string& command, Json report,
           const std::vector<Gate>& gates) {
    report["gates"] = to_json(gates);
    bool ok = all_pass(gates);
    report["pass"] = ok;
    std::string rendered = render_json(report);
    write_text_file((ctx.dir / "report.json").string(), rendered);
    if (ctx.emit_json) std::cout << rendered;

    std::cout << command << ": " << (ok ? "PASS" : "FAIL") << " (" << gates.size()
              << " gates), outputs in " << ctx.dir.string() << "\n";
    for (const auto& gate : gates) {
        std::cout << "  [" << (gate.pass ? "pass" : "FAIL") << "] " << gate.name << " = "
                  << CsvWriter::format(gate.value) << " " << gate.direction << " "
                  << CsvWriter::format(gate.threshold) << "\n";
    }
    return ok ? 0 : 1;
}

Gate gate_le(const std::string& name, double value, double threshold) {
    return Gate{name, value, threshold, value <= threshold, "<="};
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const RunContext& ctx) {
    write_manifest(ctx, "simulate");
    const int n = ctx.model.n();

    std::vector<std::string> header = {"path", "node", "t"};
    for (int i = 0; i < n; ++i) header.push_back("x" + std::to_string(i));
    CsvWriter csv(header);

    Mat terminal(ctx.cfg.paths, n);
    for (int p = 0; p < ctx.cfg.paths; ++p) {
        BrownianPath path = sample_brownian(ctx.cfg.seed, static_cast<std::uint64_t>(p),
                                            ctx.grid, ctx.model.m());
        SolutionPath X = solve_mild(ctx.model, path, p);
        for (int j = 0; j <= ctx.grid.steps; ++j) {
            std::vector<double> row = {static_cast<double>(p), static_cast<double>(j),
                                       ctx.grid.node(j)};
            for (int i = 0; i < n; ++i) row.push_back(X.states(j, i));
            csv.add_row(row);
        }
        terminal.row(p) = X.states.row(ctx.grid.steps);
    }
    csv.write((ctx.dir / "paths.csv").string());

    Json report = report_header(ctx, "simulate");
    Json stats;
    Vec mean = terminal.colwise().mean().transpose();
    stats["terminal_mean"] = Json::array();
    stats["terminal_std"] = Json::array();
    for (int i = 0; i < n; ++i) {
        double mu = mean[i];
        double var = (terminal.col(i).array() - mu).square().sum() /
                     std::max(1, ctx.cfg.paths - 1);
        stats["terminal_mean"].push_back(mu);
        stats["terminal_std"].push_back(std::sqrt(var));
    }
    double norm_acc = 0.0;
    for (int p = 0; p < ctx.cfg.paths; ++p) {
        norm_acc += e_norm(ctx.model.cfg, Vec(terminal.row(p).transpose()));
    }
    stats["terminal_mean_e_norm"] = norm_acc / ctx.cfg.paths;
    stats["paths"] = ctx.cfg.paths;
    report["stats"] = stats;
    return finish(ctx, "simulate", report, {});
}

// --------------------------------------------------------------- flow-check

int cmd_flow_check(const RunContext& ctx) {
    write_manifest(ctx, "flow-check");
    const int levels = ctx.cfg.refinements;
    const int factor_full = 1 << (levels - 1);
    TimeGrid fine(ctx.grid.horizon, ctx.grid.steps * factor_full);
    BrownianPath master = sample_brownian(ctx.cfg.seed, 0, fine, ctx.model.m());

    CsvWriter refinement({"level", "dt", "max_q", "range_residual", "formulation_agreement"});
    std::vector<double> q_maxima;
    std::vector<Gate> gates;
    Json report = report_header(ctx, "flow-check");

    Vec probe = Vec::Ones(ctx.model.n()) / std::sqrt(static_cast<double>(ctx.model.n()));
    std::optional<CsvWriter> q_csv;
    double agreement_worst = -1.0;

    for (int level = 0; level < levels; ++level) {
        int factor = 1 << (levels - 1 - level);
        BrownianPath path = factor == 1 ? master : master.coarsened(factor);
        SolutionPath X = solve_mild(ctx.model, path);
        FlowBundle flows = solve_flows(ctx.model, X, path, ctx.formulation,
                                       ctx.cfg.overflow_cap);
        std::vector<double> q = residual_q(flows);
        double max_q = *std::max_element(q.begin(), q.end());
        q_maxima.push_back(max_q);
        double range = range_residual(ctx.model, flows, probe);

        double agreement = -1.0;
        if (ctx.formulation == Formulation::conjugated) {
            FlowBundle direct = solve_flows(ctx.model, X, path, Formulation::direct,
                                            ctx.cfg.overflow_cap);
            const Mat& a = flows.Z.back();
            const Mat& b = direct.Z.back();
            agreement = (a - b).norm() / b.norm();
            agreement_worst = std::max(agreement_worst, agreement);
        }
        refinement.add_row({static_cast<double>(level), path.grid.dt, max_q, range, agreement});

        if (level == 0) {
            CsvWriter nodes({"node", "t", "q"});
            for (std::size_t j = 0; j < q.size(); ++j) {
                nodes.add_row({static_cast<double>(j),
                               path.grid.node(static_cast<int>(j)), q[j]});
            }
            nodes.write((ctx.dir / "q_residual.csv").string());
        }
    }
    refinement.write((ctx.dir / "refinement.csv").string());

    // First-variation against bumped trajectories, base grid, common noise.
    BrownianPath base = factor_full == 1 ? master : master.coarsened(factor_full);
    SolutionPath X = solve_mild(ctx.model, base);
    FlowBundle flows = solve_first_variation(ctx.model, X, base);
    GaussianStream dirs(ctx.cfg.seed, 0xF1D0);
    const double eps = 1e-5;
    double fd_worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        Vec h(ctx.model.n());
        for (int i = 0; i < ctx.model.n(); ++i) h[i] = dirs.normal();
        h /= e_norm(ctx.model.cfg, h);
        ModelSpec bumped = ctx.model;
        bumped.initial_x = ctx.model.initial_x + eps * h;
        SolutionPath Xb = solve_mild(bumped, base);
        Vec fd = (Xb.at(ctx.grid.steps) - X.at(ctx.grid.steps)) / eps;
        Vec lin = flows.Y.back() * h;
        double rel = e_norm(ctx.model.cfg, Vec(lin - fd)) / e_norm(ctx.model.cfg, lin);
        fd_worst = std::max(fd_worst, rel);
    }

    gates.push_back(gate_le("max_q_residual", q_maxima.front(), ctx.cfg.tol.q_residual));
    gates.push_back(gate_le("first_variation_fd_rel", fd_worst, ctx.cfg.tol.fd_rel));
    if (agreement_worst >= 0.0) {
        gates.push_back(gate_le("formulation_agreement", agreement_worst,
                                ctx.cfg.tol.formulation_agreement));
    }

    report["q_maxima"] = q_maxima;
    if (levels > 1) {
        // Informational: on noise-dominated paths this fluctuates and is not gated.
        report["q_decay_per_halving"] = std::pow(q_maxima.front() / q_maxima.back(),
                                                 1.0 / static_cast<double>(levels - 1));
    }
    report["fd_rel_worst"] = fd_worst;
    if (agreement_worst >= 0.0) report["formulation_agreement"] = agreement_worst;
    report["p_valid_nodes"] = ctx.grid.steps + 1;
    return finish(ctx, "flow-check", report, gates);
}

// ---------------------------------------------------------------- malliavin

int cmd_malliavin(const RunContext& ctx) {
    write_manifest(ctx, "malliavin");
    const int levels = ctx.cfg.refinements;
    const int factor_full = 1 << (levels - 1);
    TimeGrid fine(ctx.grid.horizon, ctx.grid.steps * factor_full);
    BrownianPath master = sample_brownian(ctx.cfg.seed, 0, fine, ctx.model.m());

    CsvWriter refinement({"level", "dt", "route_rel"});
    std::vector<double> route_errors;
    Json report = report_header(ctx, "malliavin");

    for (int level = 0; level < levels; ++level) {
        int factor = 1 << (levels - 1 - level);
        BrownianPath path = factor == 1 ? master : master.coarsened(factor);
        int steps = path.grid.steps;
        int r_index = static_cast<int>(std::lround(ctx.cfg.r_fraction * steps));
        SolutionPath X = solve_mild(ctx.model, path);
        FlowBundle flows = solve_flows(ctx.model, X, path, ctx.formulation,
                                       ctx.cfg.overflow_cap);
        MalliavinBundle sde = solve_malliavin_sde(ctx.model, X, path, r_index);
        Mat prod = product_formula(ctx.model, X, flows, r_index, steps);
        double rel = (sde.at(steps) - prod).norm() / prod.norm();
        route_errors.push_back(rel);
        refinement.add_row({static_cast<double>(level), path.grid.dt, rel});
    }
    refinement.write((ctx.dir / "refinement.csv").string());

    // Base-grid quantities: chain rule, covariance, quadratic form.
    BrownianPath base = factor_full == 1 ? master : master.coarsened(factor_full);
    int r_index = static_cast<int>(std::lround(ctx.cfg.r_fraction * ctx.grid.steps));
    SolutionPath X = solve_mild(ctx.model, base);
    FlowBundle flows = solve_flows(ctx.model, X, base, ctx.formulation, ctx.cfg.overflow_cap);
    double chain = chain_rule_check(ctx.F, ctx.model, X, flows, r_index, ctx.grid.steps);
    CovarianceReport cov = covariance(ctx.model, X, flows, ctx.F);

    GaussianStream phis(ctx.cfg.seed, 0xFA57);
    double quad_worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        Vec phi(cov.gamma.rows());
        for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = phis.normal();
        double direct_form = phi.dot(cov.gamma * phi);
        double integral_form = quadratic_form(ctx.model, X, flows, cov, phi);
        double rel = std::abs(direct_form - integral_form) / (1.0 + std::abs(direct_form));
        quad_worst = std::max(quad_worst, rel);
    }

    // Zero before r: part of the derivative's contract.
    Mat before = product_formula(ctx.model, X, flows, r_index, r_index > 0 ? r_index - 1 : 0);
    double zero_norm = r_index > 0 ? before.norm() : 0.0;

    std::vector<Gate> gates;
    gates.push_back(gate_le("route_rel_at_finest", route_errors.back(), ctx.cfg.tol.route_rel));
    gates.push_back(gate_le("chain_rule", chain, ctx.cfg.tol.chain_rule));
    gates.push_back(gate_le("quadratic_form_rel", quad_worst, ctx.cfg.tol.quad_form));
    gates.push_back(gate_le("derivative_zero_before_r", zero_norm, 0.0));

    report["route_errors"] = route_errors;
    report["r_index"] = r_index;
    report["chain_rule"] = chain;
    report["quadratic_form_rel"] = quad_worst;
    report["covariance"] = to_json(cov);
    return finish(ctx, "malliavin", report, gates);
}

// ---------------------------------------------------------------- hormander

int cmd_hormander(const RunContext& ctx) {
    write_manifest(ctx, "hormander");
    SpanReport span = hormander_rank(ctx.model, ctx.model.initial_x, ctx.cfg.bracket_depth,
                                     ctx.cfg.tol.rank_tol);
    Json report = report_header(ctx, "hormander");
    report["span"] = to_json(span);

    std::vector<Gate> gates;
    if (ctx.cfg.expected_rank) {
        Gate gate{"rank", static_cast<double>(span.rank),
                  static_cast<double>(*ctx.cfg.expected_rank),
                  span.rank == *ctx.cfg.expected_rank, "=="};
        gates.push_back(gate);
    }
    return finish(ctx, "hormander", report, gates);
}

// ------------------------------------------------------------------ density

int cmd_density(const RunContext& ctx) {
    write_manifest(ctx, "density");
    VerdictOptions options;
    options.bracket_depth = ctx.cfg.bracket_depth;
    options.rank_tol = ctx.cfg.tol.rank_tol;
    options.gamma_paths = ctx.cfg.gamma_paths;
    options.eig_floor = ctx.cfg.tol.eig_floor;
    options.atom_tol = ctx.cfg.tol.atom_tol;
    options.atom_fraction = ctx.cfg.tol.atom_fraction;
    options.kde_l1_max = ctx.cfg.tol.kde_l1;
    options.kde_grid = ctx.cfg.kde_grid;
    options.formulation = ctx.formulation;
    options.overflow_cap = ctx.cfg.overflow_cap;

    SampleSet set = monte_carlo(ctx.model, ctx.grid, ctx.F, ctx.cfg.samples, ctx.cfg.seed);
    {
        std::vector<std::string> header = {"sample"};
        for (int c = 0; c < set.samples.cols(); ++c) header.push_back("y" + std::to_string(c));
        CsvWriter csv(header);
        for (Eigen::Index i = 0; i < set.samples.rows(); ++i) {
            std::vector<double> row = {static_cast<double>(i)};
            for (Eigen::Index c = 0; c < set.samples.cols(); ++c) row.push_back(set.samples(i, c));
            csv.add_row(row);
        }
        csv.write((ctx.dir / "samples.csv").string());
    }

    DensityReport verdict =
        density_verdict(ctx.model, ctx.grid, ctx.F, ctx.cfg.samples, ctx.cfg.seed, options);

    if (!verdict.ladders.empty()) {
        CsvWriter csv({"coordinate", "x", "f_h", "f_h2", "f_h4"});
        for (const auto& ladder : verdict.ladders) {
            for (Eigen::Index i = 0; i < ladder.grid.size(); ++i) {
                csv.add_row({static_cast<double>(ladder.coordinate), ladder.grid[i],
                             ladder.density_h[i], ladder.density_h2[i], ladder.density_h4[i]});
            }
        }
        csv.write((ctx.dir / "kde.csv").string());
    }

    Json report = report_header(ctx, "density");
    report["verdict"] = to_json(verdict);

    std::vector<Gate> gates;
    Gate consistent{"verdict_consistent", verdict.consistent ? 1.0 : 0.0, 1.0,
                    verdict.consistent, "=="};
    gates.push_back(consistent);
    return finish(ctx, "density", report, gates);
}

// ---------------------------------------------------------------------- all

int cmd_all(const ExperimentConfig& cfg, bool emit_json) {
    int worst = 0;
    const char* names[] = {"simulate", "flow-check", "malliavin", "hormander", "density"};
    for (const char* name : names) {
        RunContext ctx = make_context(cfg, name, emit_json);
        int rc = 0;
        std::string cmd = name;
        if (cmd == "simulate") rc = cmd_simulate(ctx);
        else if (cmd == "flow-check") rc = cmd_flow_check(ctx);
        else if (cmd == "malliavin") rc = cmd_malliavin(ctx);
        else if (cmd == "hormander") rc = cmd_hormander(ctx);
        else rc = cmd_density(ctx);
        worst = std::max(worst, rc);
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical diagnostics for hypoelliptic stochastic evolution models"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> samples;
    std::optional<double> dt;
    std::optional<int> steps;
    std::optional<int> depth;
    std::optional<std::string> outdir;
    std::optional<std::string> label;
    std::optional<std::string> model;
    bool emit_json = false;

    app.add_option("--config", config_path, "Config file (JSON, comments allowed)");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--paths", paths, "Trajectory count for simulate");
    app.add_option("--samples", samples, "Sample count for density");
    app.add_option("--dt", dt, "Time step (overrides steps)");
    app.add_option("--steps", steps, "Number of grid steps");
    app.add_option("--depth", depth, "Bracket depth");
    app.add_option("--outdir", outdir, "Output directory root");
    app.add_option("--label", label, "Run label (default: UTC timestamp)");
    app.add_option("--model", model, "Model name from the built-in zoo");
    app.add_flag("--json", emit_json, "Print report.json to stdout");

    app.add_subcommand("simulate", "Write sample trajectories and terminal statistics");
    app.add_subcommand("flow-check", "First variation and right-inverse diagnostics");
    app.add_subcommand("malliavin", "Derivative routes, covariance, quadratic form");
    app.add_subcommand("hormander", "Bracket span rank at the initial point");
    app.add_subcommand("density", "Sampling, atom test, KDE ladder, verdict");
    app.add_subcommand("all", "Run every diagnostic with shared settings");

    CLI11_PARSE(app, argc, argv);
    std::string command = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (model) {
            cfg.model_name = *model;
            cfg.inline_model.reset();
        }
        if (seed) cfg.seed = *seed;
        if (paths) cfg.paths = *paths;
        if (samples) cfg.samples = *samples;
        if (dt) {
            cfg.dt = *dt;
            cfg.steps = 0;
        }
        if (steps) {
            cfg.steps = *steps;
            cfg.dt = 0.0;
        }
        if (depth) cfg.bracket_depth = *depth;
        if (outdir) cfg.outdir = *outdir;
        if (label) cfg.label = *label;

        if (command == "all") return cmd_all(cfg, emit_json);
        RunContext ctx = make_context(cfg, command, emit_json);
        if (command == "simulate") return cmd_simulate(ctx);
        if (command == "flow-check") return cmd_flow_check(ctx);
        if (command == "malliavin") return cmd_malliavin(ctx);
        if (command == "hormander") return cmd_hormander(ctx);
        if (command == "density") return cmd_density(ctx);
        std::cerr << "unknown command " << command << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
