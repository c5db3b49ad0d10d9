#include "hypolab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

namespace hypolab {

namespace {

// Best-effort line hint: first occurrence of the quoted key in the raw text.
std::string line_hint(const std::string& raw, const std::string& key) {
    if (raw.empty() || key.empty()) return "";
    std::string needle = "\"" + key + "\"";
    std::size_t pos = raw.find(needle);
    if (pos == std::string::npos) return "";
    long line = 1 + static_cast<long>(std::count(raw.begin(), raw.begin() +
                                                 static_cast<std::ptrdiff_t>(pos), '\n'));
    return " (line " + std::to_string(line) + ")";
}

[[noreturn]] void fail(const std::string& raw, const std::string& pointer,
                       const std::string& key, const std::string& message) {
    throw ConfigError("config " + pointer + ": " + message + line_hint(raw, key));
}

void require_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& raw,
                  const std::string& pointer) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            fail(raw, pointer + "/" + item.key(), item.key(), "unknown key");
        }
    }
}

double get_number(const Json& obj, const std::string& key, const std::string& raw,
                  const std::string& pointer, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(raw, pointer + "/" + key, key, "expected a number");
    return obj[key].get<double>();
}

int get_int(const Json& obj, const std::string& key, const std::string& raw,
            const std::string& pointer, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        fail(raw, pointer + "/" + key, key, "expected an integer");
    return obj[key].get<int>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& raw,
                       const std::string& pointer, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) fail(raw, pointer + "/" + key, key, "expected a string");
    return obj[key].get<std::string>();
}

Vec vec_from_json(const Json& arr, const std::string& raw, const std::string& pointer,
                  const std::string& key) {
    if (!arr.is_array() || arr.empty())
        fail(raw, pointer, key, "expected a non-empty array of numbers");
    Vec out(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) fail(raw, pointer, key, "expected numbers");
        out[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return out;
}

Mat mat_from_json(const Json& arr, const std::string& raw, const std::string& pointer,
                  const std::string& key) {
    if (!arr.is_array() || arr.empty() || !arr[0].is_array())
        fail(raw, pointer, key, "expected an array of arrays of numbers");
    const std::size_t cols = arr[0].size();
    Mat out(arr.size(), cols);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_array() || arr[i].size() != cols)
            fail(raw, pointer, key, "rows must all have the same length");
        for (std::size_t j = 0; j < cols; ++j) {
            if (!arr[i][j].is_number()) fail(raw, pointer, key, "expected numbers");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                arr[i][j].get<double>();
        }
    }
    return out;
}

Json vec_to_json(const Vec& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Json mat_to_json(const Mat& M) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        arr.push_back(row);
    }
    return arr;
}

std::vector<Monomial> monomials_from_json(const Json& arr, int n, const std::string& raw,
                                          const std::string& pointer) {
    if (!arr.is_array()) fail(raw, pointer, "", "expected an array of monomials");
    std::vector<Monomial> out;
    for (const auto& entry : arr) {
        if (!entry.is_object() || !entry.contains("coeff") || !entry.contains("powers"))
            fail(raw, pointer, "coeff", "monomial needs \"coeff\" and \"powers\"");
        require_keys(entry, {"coeff", "powers"}, raw, pointer);
        Monomial mono;
        if (!entry["coeff"].is_number()) fail(raw, pointer, "coeff", "coeff must be a number");
        mono.coeff = entry["coeff"].get<double>();
        if (!entry["powers"].is_array() || static_cast<int>(entry["powers"].size()) != n)
            fail(raw, pointer, "powers", "powers must be an array of length n");
        for (const auto& p : entry["powers"]) {
            if (!p.is_number_integer() || p.get<int>() < 0)
                fail(raw, pointer, "powers", "powers must be non-negative integers");
            mono.powers.push_back(p.get<int>());
        }
        out.push_back(std::move(mono));
    }
    return out;
}

ModelSpec model_from_json_impl(const Json& doc, const std::string& raw) {
    const std::string ptr = "/model";
    if (!doc.is_object()) fail(raw, ptr, "model", "inline model must be an object");
    require_keys(doc,
                 {"name", "n", "m", "spectrum", "generator", "e_weights", "h_weights",
                  "embed_constant", "drift", "diffusion", "initial_x", "horizon"},
                 raw, ptr);

    ModelSpec model;
    model.name = get_string(doc, "name", raw, ptr, "custom");
    int n = get_int(doc, "n", raw, ptr, 0);
    int m = get_int(doc, "m", raw, ptr, 0);
    if (n <= 0 || m <= 0) fail(raw, ptr, "n", "inline model needs positive n and m");

    model.cfg = TruncationConfig::unit(n, m);
    if (doc.contains("e_weights"))
        model.cfg.e_weights = vec_from_json(doc["e_weights"], raw, ptr + "/e_weights", "e_weights");
    if (doc.contains("h_weights"))
        model.cfg.h_weights = vec_from_json(doc["h_weights"], raw, ptr + "/h_weights", "h_weights");
    model.cfg.embed_constant = get_number(doc, "embed_constant", raw, ptr, 1.0);

    if (doc.contains("spectrum") == doc.contains("generator"))
        fail(raw, ptr, "spectrum", "specify exactly one of \"spectrum\" or \"generator\"");
    if (doc.contains("spectrum")) {
        Vec spectrum = vec_from_json(doc["spectrum"], raw, ptr + "/spectrum", "spectrum");
        if (spectrum.size() != n) fail(raw, ptr, "spectrum", "spectrum must have length n");
        model.sg = Semigroup::diagonal(spectrum);
    } else {
        Mat gen = mat_from_json(doc["generator"], raw, ptr + "/generator", "generator");
        if (gen.rows() != n || gen.cols() != n)
            fail(raw, ptr, "generator", "generator must be n x n");
        model.sg = Semigroup::dense(gen);
    }

    if (!doc.contains("drift")) fail(raw, ptr, "drift", "inline model needs \"drift\"");
    if (!doc["drift"].is_array() || static_cast<int>(doc["drift"].size()) != n)
        fail(raw, ptr, "drift", "drift must be an array of n monomial lists");
    std::vector<std::vector<Monomial>> drift_terms;
    for (int i = 0; i < n; ++i) {
        drift_terms.push_back(
            monomials_from_json(doc["drift"][static_cast<std::size_t>(i)], n, raw,
                                ptr + "/drift/" + std::to_string(i)));
    }
    try {
        model.drift = polynomial_field(n, drift_terms);
    } catch (const ConfigError& e) {
        fail(raw, ptr + "/drift", "drift", e.what());
    }

    if (!doc.contains("diffusion")) fail(raw, ptr, "diffusion", "inline model needs \"diffusion\"");
    if (!doc["diffusion"].is_array() || static_cast<int>(doc["diffusion"].size()) != m)
        fail(raw, ptr, "diffusion", "diffusion must be an array of m columns");
    for (int k = 0; k < m; ++k) {
        const Json& column = doc["diffusion"][static_cast<std::size_t>(k)];
        std::string cptr = ptr + "/diffusion/" + std::to_string(k);
        if (!column.is_array() || static_cast<int>(column.size()) != n)
            fail(raw, cptr, "diffusion", "each diffusion column needs n monomial lists");
        std::vector<std::vector<Monomial>> column_terms;
        for (int i = 0; i < n; ++i) {
            column_terms.push_back(monomials_from_json(column[static_cast<std::size_t>(i)], n,
                                                       raw, cptr + "/" + std::to_string(i)));
        }
        try {
            model.diffusion.columns.push_back(polynomial_field(n, column_terms));
        } catch (const ConfigError& e) {
            fail(raw, cptr, "diffusion", e.what());
        }
    }

    if (!doc.contains("initial_x")) fail(raw, ptr, "initial_x", "inline model needs \"initial_x\"");
    model.initial_x = vec_from_json(doc["initial_x"], raw, ptr + "/initial_x", "initial_x");
    model.default_horizon = get_number(doc, "horizon", raw, ptr, 1.0);

    try {
        model.validate();
    } catch (const ConfigError& e) {
        fail(raw, ptr, "model", e.what());
    }
    return model;
}

Tolerances tolerances_from_json(const Json& doc, const std::string& raw) {
    const std::string ptr = "/tolerances";
    Tolerances tol;
    require_keys(doc,
                 {"fd_rel", "q_residual", "formulation_agreement", "route_rel",
                  "chain_rule", "quad_form", "semimartingale", "eig_floor", "kde_l1",
                  "atom_tol", "atom_fraction", "rank_tol"},
                 raw, ptr);
    tol.fd_rel = get_number(doc, "fd_rel", raw, ptr, tol.fd_rel);
    tol.q_residual = get_number(doc, "q_residual", raw, ptr, tol.q_residual);
    tol.formulation_agreement =
        get_number(doc, "formulation_agreement", raw, ptr, tol.formulation_agreement);
    tol.route_rel = get_number(doc, "route_rel", raw, ptr, tol.route_rel);
    tol.chain_rule = get_number(doc, "chain_rule", raw, ptr, tol.chain_rule);
    tol.quad_form = get_number(doc, "quad_form", raw, ptr, tol.quad_form);
    tol.semimartingale = get_number(doc, "semimartingale", raw, ptr, tol.semimartingale);
    tol.eig_floor = get_number(doc, "eig_floor", raw, ptr, tol.eig_floor);
    tol.kde_l1 = get_number(doc, "kde_l1", raw, ptr, tol.kde_l1);
    tol.atom_tol = get_number(doc, "atom_tol", raw, ptr, tol.atom_tol);
    tol.atom_fraction = get_number(doc, "atom_fraction", raw, ptr, tol.atom_fraction);
    tol.rank_tol = get_number(doc, "rank_tol", raw, ptr, tol.rank_tol);
    for (double v : {tol.fd_rel, tol.q_residual, tol.formulation_agreement,
                     tol.route_rel, tol.chain_rule, tol.quad_form, tol.semimartingale,
                     tol.eig_floor, tol.kde_l1, tol.atom_tol, tol.atom_fraction, tol.rank_tol}) {
        if (!(v > 0.0)) fail(raw, ptr, "tolerances", "tolerances must be positive");
    }
    return tol;
}

ExperimentConfig config_from_json_impl(Json doc, const std::string& raw) {
    if (doc.is_object() && doc.contains("command") && doc.contains("config")) {
        doc = doc["config"];  // manifest round trip
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    require_keys(doc,
                 {"model", "horizon", "steps", "dt", "seed", "paths", "samples", "gamma_paths",
                  "picard_iterations", "picard_paths", "refinements", "r_fraction",
                  "bracket_depth", "functional", "expected_rank", "formulation",
                  "overflow_cap", "kde_grid", "tolerances", "outdir", "label"},
                 raw, "");

    ExperimentConfig cfg;
    if (doc.contains("model")) {
        if (doc["model"].is_string()) {
            cfg.model_name = doc["model"].get<std::string>();
        } else if (doc["model"].is_object()) {
            cfg.inline_model = doc["model"];
            cfg.model_name = get_string(doc["model"], "name", raw, "/model", "custom");
        } else {
            fail(raw, "/model", "model", "expected a zoo name or an inline model object");
        }
    }

    cfg.horizon = get_number(doc, "horizon", raw, "", 0.0);
    if (doc.contains("horizon") && !(cfg.horizon > 0.0))
        fail(raw, "/horizon", "horizon", "horizon must be positive");
    cfg.steps = get_int(doc, "steps", raw, "", 0);
    if (doc.contains("steps") && cfg.steps <= 0)
        fail(raw, "/steps", "steps", "steps must be positive");
    cfg.dt = get_number(doc, "dt", raw, "", 0.0);
    if (doc.contains("dt") && !(cfg.dt > 0.0)) fail(raw, "/dt", "dt", "dt must be positive");
    if (doc.contains("dt") && doc.contains("steps"))
        fail(raw, "/dt", "dt", "specify either dt or steps, not both");

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
            fail(raw, "/seed", "seed", "expected an unsigned integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    cfg.paths = get_int(doc, "paths", raw, "", cfg.paths);
    cfg.samples = get_int(doc, "samples", raw, "", cfg.samples);
    cfg.gamma_paths = get_int(doc, "gamma_paths", raw, "", cfg.gamma_paths);
    cfg.picard_iterations = get_int(doc, "picard_iterations", raw, "", cfg.picard_iterations);
    cfg.picard_paths = get_int(doc, "picard_paths", raw, "", cfg.picard_paths);
    cfg.refinements = get_int(doc, "refinements", raw, "", cfg.refinements);
    cfg.r_fraction = get_number(doc, "r_fraction", raw, "", cfg.r_fraction);
    cfg.bracket_depth = get_int(doc, "bracket_depth", raw, "", cfg.bracket_depth);
    const std::vector<std::pair<int, const char*>> positive_counts = {
        {cfg.paths, "paths"},
        {cfg.samples, "samples"},
        {cfg.gamma_paths, "gamma_paths"},
        {cfg.picard_iterations, "picard_iterations"},
        {cfg.picard_paths, "picard_paths"},
        {cfg.refinements, "refinements"}};
    for (const auto& [value, name] : positive_counts) {
        if (value <= 0) fail(raw, std::string("/") + name, name, "must be positive");
    }
    if (cfg.bracket_depth < 0)
        fail(raw, "/bracket_depth", "bracket_depth", "must be non-negative");
    if (!(cfg.r_fraction > 0.0) || !(cfg.r_fraction < 1.0))
        fail(raw, "/r_fraction", "r_fraction", "must lie strictly between 0 and 1");

    if (doc.contains("functional"))
        cfg.functional = mat_from_json(doc["functional"], raw, "/functional", "functional");
    if (doc.contains("expected_rank"))
        cfg.expected_rank = get_int(doc, "expected_rank", raw, "", 0);

    cfg.formulation = get_string(doc, "formulation", raw, "", cfg.formulation);
    if (cfg.formulation != "auto" && cfg.formulation != "conjugated" &&
        cfg.formulation != "direct")
        fail(raw, "/formulation", "formulation", "must be auto, conjugated, or direct");
    cfg.overflow_cap = get_number(doc, "overflow_cap", raw, "", cfg.overflow_cap);
    if (!(cfg.overflow_cap > 0.0))
        fail(raw, "/overflow_cap", "overflow_cap", "must be positive");
    cfg.kde_grid = get_int(doc, "kde_grid", raw, "", cfg.kde_grid);
    if (cfg.kde_grid < 2) fail(raw, "/kde_grid", "kde_grid", "must be at least 2");

    if (doc.contains("tolerances")) {
        if (!doc["tolerances"].is_object())
            fail(raw, "/tolerances", "tolerances", "expected an object");
        cfg.tol = tolerances_from_json(doc["tolerances"], raw);
    }

    cfg.outdir = get_string(doc, "outdir", raw, "", cfg.outdir);
    cfg.label = get_string(doc, "label", raw, "", cfg.label);

    if (cfg.inline_model) {
        model_from_json_impl(*cfg.inline_model, raw);  // validate eagerly
    } else {
        zoo(cfg.model_name);  // throws on unknown names
    }
    return cfg;
}

}  // namespace

ModelSpec ExperimentConfig::make_model() const {
    if (inline_model) return model_from_json_impl(*inline_model, "");
    return zoo(model_name);
}

TimeGrid ExperimentConfig::make_grid(const ModelSpec& model) const {
    double T = horizon > 0.0 ? horizon : model.default_horizon;
    if (dt > 0.0) {
        int derived = static_cast<int>(std::lround(T / dt));
        if (derived < 1) derived = 1;
        return TimeGrid(T, derived);  // dt is snapped to T / round(T / dt)
    }
    return TimeGrid(T, steps > 0 ? steps : 1000);
}

Mat ExperimentConfig::make_functional(const ModelSpec& model) const {
    if (!functional) return Mat::Identity(model.n(), model.n());
    if (functional->cols() != model.n())
        throw ConfigError("config /functional: expected " + std::to_string(model.n()) +
                          " columns");
    return *functional;
}

Formulation ExperimentConfig::resolve_formulation(const ModelSpec& model,
                                                  const TimeGrid& grid) const {
    if (formulation == "conjugated") return Formulation::conjugated;
    if (formulation == "direct") return Formulation::direct;
    if (model.sg.kind() != Semigroup::Kind::diagonal) return Formulation::direct;
    double magnitude = (grid.horizon * model.sg.spectrum().array()).abs().maxCoeff();
    return magnitude <= overflow_cap ? Formulation::conjugated : Formulation::direct;
}

Json ExperimentConfig::to_json() const {
    Json doc;
    if (inline_model) {
        doc["model"] = *inline_model;
    } else {
        doc["model"] = model_name;
    }
    if (horizon > 0.0) doc["horizon"] = horizon;
    if (dt > 0.0) {
        doc["dt"] = dt;
    } else if (steps > 0) {
        doc["steps"] = steps;
    }
    doc["seed"] = seed;
    doc["paths"] = paths;
    doc["samples"] = samples;
    doc["gamma_paths"] = gamma_paths;
    doc["picard_iterations"] = picard_iterations;
    doc["picard_paths"] = picard_paths;
    doc["refinements"] = refinements;
    doc["r_fraction"] = r_fraction;
    doc["bracket_depth"] = bracket_depth;
    if (functional) doc["functional"] = mat_to_json(*functional);
    if (expected_rank) doc["expected_rank"] = *expected_rank;
    doc["formulation"] = formulation;
    doc["overflow_cap"] = overflow_cap;
    doc["kde_grid"] = kde_grid;
    Json tolerances;
    tolerances["fd_rel"] = tol.fd_rel;
    tolerances["q_residual"] = tol.q_residual;
    tolerances["formulation_agreement"] = tol.formulation_agreement;
    tolerances["route_rel"] = tol.route_rel;
    tolerances["chain_rule"] = tol.chain_rule;
    tolerances["quad_form"] = tol.quad_form;
    tolerances["semimartingale"] = tol.semimartingale;
    tolerances["eig_floor"] = tol.eig_floor;
    tolerances["kde_l1"] = tol.kde_l1;
    tolerances["atom_tol"] = tol.atom_tol;
    tolerances["atom_fraction"] = tol.atom_fraction;
    tolerances["rank_tol"] = tol.rank_tol;
    doc["tolerances"] = tolerances;
    doc["outdir"] = outdir;
    if (!label.empty()) doc["label"] = label;
    return doc;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string raw = buffer.str();

    Json doc;
    try {
        doc = Json::parse(raw, nullptr, true, /*ignore_comments=*/true);
    } catch (const Json::parse_error& e) {
        // byte offset -> line/column
        std::size_t offset = std::min<std::size_t>(e.byte, raw.size());
        long line = 1 + static_cast<long>(std::count(raw.begin(), raw.begin() +
                                                     static_cast<std::ptrdiff_t>(offset), '\n'));
        std::size_t line_start = raw.rfind('\n', offset == 0 ? 0 : offset - 1);
        long column = static_cast<long>(offset - (line_start == std::string::npos
                                                      ? 0
                                                      : line_start + 1)) + 1;
        throw ConfigError("config: parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(column) + ": " + e.what());
    }
    return config_from_json_impl(std::move(doc), raw);
}

ExperimentConfig config_from_json(const Json& doc) {
    return config_from_json_impl(doc, "");
}

ModelSpec model_from_json(const Json& doc) {
    return model_from_json_impl(doc, "");
}

}  // namespace hypolab
