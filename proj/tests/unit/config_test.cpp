#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "hypolab/config.hpp"

using namespace hypolab;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    std::filesystem::path path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
}

Json inline_toy_model() {
    Json model;
    model["name"] = "toy";
    model["n"] = 1;
    model["m"] = 1;
    model["spectrum"] = {-0.5};
    model["drift"] = Json::array({Json::array({Json{{"coeff", 0.4}, {"powers", {2}}}})});
    model["diffusion"] =
        Json::array({Json::array({Json::array({Json{{"coeff", 0.6}, {"powers", {1}}}})})});
    model["initial_x"] = {0.5};
    model["horizon"] = 2.0;
    return model;
}

}  // namespace

TEST_CASE("an empty document produces the documented defaults") {
    ExperimentConfig cfg = config_from_json(Json::object());
    CHECK(cfg.model_name == "heat_mult");
    CHECK(cfg.seed == 20240814);
    CHECK(cfg.paths == 8);
    CHECK(cfg.samples == 10000);
    CHECK(cfg.r_fraction == 0.5);
    CHECK(cfg.bracket_depth == 2);
    CHECK(cfg.formulation == "auto");
    CHECK(cfg.kde_grid == 512);
    CHECK(cfg.outdir == "out");
    CHECK(cfg.label.empty());
    CHECK(!cfg.functional);
    CHECK(!cfg.inline_model);

    ModelSpec model = cfg.make_model();
    TimeGrid grid = cfg.make_grid(model);
    CHECK(grid.steps == 1000);
    CHECK(grid.horizon == model.default_horizon);
    Mat F = cfg.make_functional(model);
    CHECK(F.rows() == model.n());
    CHECK((F - Mat::Identity(model.n(), model.n())).norm() == 0.0);
}

TEST_CASE("unknown keys are rejected with their JSON pointer") {
    Json doc;
    doc["modle"] = "heat_mult";
    try {
        config_from_json(doc);
        CHECK(false);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("/modle") != std::string::npos);
        CHECK(msg.find("unknown key") != std::string::npos);
    }

    Json tol_doc;
    tol_doc["tolerances"] = Json{{"q_decay", 1.3}};
    CHECK_THROWS_AS(config_from_json(tol_doc), ConfigError);
}

TEST_CASE("file loading reports line numbers for bad keys and bad syntax") {
    auto bad_key = write_temp("hypolab_cfg_badkey.json",
                              "{\n"
                              "  // comments are allowed\n"
                              "  \"seeed\": 7\n"
                              "}\n");
    try {
        load_config_file(bad_key.string());
        CHECK(false);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("/seeed") != std::string::npos);
        CHECK(msg.find("(line 3)") != std::string::npos);
    }
    std::filesystem::remove(bad_key);

    auto bad_syntax = write_temp("hypolab_cfg_badsyntax.json", "{\n  \"dt\": 0.01,,\n}\n");
    try {
        load_config_file(bad_syntax.string());
        CHECK(false);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("parse error") != std::string::npos);
        CHECK(msg.find("line 2") != std::string::npos);
    }
    std::filesystem::remove(bad_syntax);

    CHECK_THROWS_AS(load_config_file("/no/such/file.json"), ConfigError);
}

TEST_CASE("grid resolution honours dt or steps but never both") {
    Json with_dt;
    with_dt["horizon"] = 2.0;
    with_dt["dt"] = 0.01;
    ExperimentConfig cfg = config_from_json(with_dt);
    ModelSpec model = cfg.make_model();
    TimeGrid grid = cfg.make_grid(model);
    CHECK(grid.steps == 200);
    CHECK(grid.dt == doctest::Approx(0.01).epsilon(1e-15));

    Json with_steps;
    with_steps["steps"] = 123;
    TimeGrid by_steps = config_from_json(with_steps).make_grid(model);
    CHECK(by_steps.steps == 123);

    Json both;
    both["dt"] = 0.01;
    both["steps"] = 100;
    CHECK_THROWS_AS(config_from_json(both), ConfigError);
}

TEST_CASE("scalar fields are range checked") {
    auto rejects = [](const char* key, Json value) {
        Json doc;
        doc[key] = std::move(value);
        CHECK_THROWS_AS(config_from_json(doc), ConfigError);
    };
    rejects("horizon", 0.0);
    rejects("horizon", -1.0);
    rejects("steps", 0);
    rejects("dt", -0.5);
    rejects("paths", 0);
    rejects("samples", -3);
    rejects("picard_iterations", 0);
    rejects("refinements", 0);
    rejects("r_fraction", 0.0);
    rejects("r_fraction", 1.0);
    rejects("r_fraction", 1.5);
    rejects("bracket_depth", -1);
    rejects("formulation", "sideways");
    rejects("overflow_cap", 0.0);
    rejects("kde_grid", 1);
    rejects("model", "no_such_model");
    rejects("model", 17);
    rejects("steps", 10.5);

    Json tolerances;
    tolerances["tolerances"] = Json{{"kde_l1", 0.0}};
    CHECK_THROWS_AS(config_from_json(tolerances), ConfigError);

    Json override_ok;
    override_ok["tolerances"] = Json{{"kde_l1", 0.2}, {"route_rel", 0.05}};
    ExperimentConfig cfg = config_from_json(override_ok);
    CHECK(cfg.tol.kde_l1 == 0.2);
    CHECK(cfg.tol.route_rel == 0.05);
    CHECK(cfg.tol.fd_rel == 5e-3);
}

TEST_CASE("functional matrices are parsed and shape checked") {
    Json doc;
    doc["model"] = "hypo3";
    doc["functional"] = Json::array({Json::array({1.0, 0.0, 0.0}),
                                     Json::array({0.0, 1.0, 0.0})});
    ExperimentConfig cfg = config_from_json(doc);
    ModelSpec model = cfg.make_model();
    Mat F = cfg.make_functional(model);
    CHECK(F.rows() == 2);
    CHECK(F.cols() == 3);
    CHECK(F(0, 0) == 1.0);
    CHECK(F(1, 2) == 0.0);

    Json ragged;
    ragged["functional"] = Json::array({Json::array({1.0, 0.0}), Json::array({1.0})});
    CHECK_THROWS_AS(config_from_json(ragged), ConfigError);

    Json wrong_width;
    wrong_width["model"] = "hypo3";
    wrong_width["functional"] = Json::array({Json::array({1.0, 0.0})});
    ExperimentConfig narrow = config_from_json(wrong_width);
    CHECK_THROWS_AS(narrow.make_functional(narrow.make_model()), ConfigError);
}

TEST_CASE("inline polynomial models build and evaluate") {
    Json doc;
    doc["model"] = inline_toy_model();
    ExperimentConfig cfg = config_from_json(doc);
    CHECK(cfg.model_name == "toy");
    ModelSpec model = cfg.make_model();
    CHECK(model.n() == 1);
    CHECK(model.m() == 1);
    CHECK(model.default_horizon == 2.0);

    Vec x = Vec::Constant(1, 0.5);
    CHECK(model.drift.eval(x)[0] == doctest::Approx(0.4 * 0.25).epsilon(1e-15));
    CHECK(model.diffusion.columns[0].eval(x)[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(model.sg.spectrum()[0] == -0.5);

    // Exactly one of spectrum / generator.
    Json both = inline_toy_model();
    both["generator"] = Json::array({Json::array({-0.5})});
    Json doc_both;
    doc_both["model"] = both;
    CHECK_THROWS_AS(config_from_json(doc_both), ConfigError);

    Json neither = inline_toy_model();
    neither.erase("spectrum");
    Json doc_neither;
    doc_neither["model"] = neither;
    CHECK_THROWS_AS(config_from_json(doc_neither), ConfigError);

    // A dense generator is accepted and drives formulation resolution.
    Json dense = inline_toy_model();
    dense.erase("spectrum");
    dense["generator"] = Json::array({Json::array({-0.5})});
    Json doc_dense;
    doc_dense["model"] = dense;
    ExperimentConfig dense_cfg = config_from_json(doc_dense);
    ModelSpec dense_model = dense_cfg.make_model();
    CHECK(dense_cfg.resolve_formulation(dense_model, dense_cfg.make_grid(dense_model)) ==
          Formulation::direct);

    // Quartic drift exceeds the supported polynomial degree.
    Json quartic = inline_toy_model();
    quartic["drift"] = Json::array({Json::array({Json{{"coeff", 1.0}, {"powers", {4}}}})});
    Json doc_quartic;
    doc_quartic["model"] = quartic;
    CHECK_THROWS_AS(config_from_json(doc_quartic), ConfigError);

    Json bad_powers = inline_toy_model();
    bad_powers["drift"] = Json::array({Json::array({Json{{"coeff", 1.0}, {"powers", {-1}}}})});
    Json doc_bad;
    doc_bad["model"] = bad_powers;
    CHECK_THROWS_AS(config_from_json(doc_bad), ConfigError);
}

TEST_CASE("formulation resolution follows the spectral magnitude") {
    Json doc;
    doc["model"] = inline_toy_model();
    doc["horizon"] = 2.0;
    ExperimentConfig cfg = config_from_json(doc);
    ModelSpec model = cfg.make_model();
    TimeGrid grid = cfg.make_grid(model);

    // |lambda| T = 1 is far below the default cap.
    CHECK(cfg.resolve_formulation(model, grid) == Formulation::conjugated);

    ExperimentConfig tight = cfg;
    tight.overflow_cap = 0.5;
    CHECK(tight.resolve_formulation(model, grid) == Formulation::direct);

    ExperimentConfig forced = cfg;
    forced.formulation = "direct";
    CHECK(forced.resolve_formulation(model, grid) == Formulation::direct);
    forced.formulation = "conjugated";
    forced.overflow_cap = 0.5;
    CHECK(forced.resolve_formulation(model, grid) == Formulation::conjugated);
}

TEST_CASE("serialized configs reload to the same document") {
    Json doc;
    doc["model"] = "hypo3";
    doc["horizon"] = 1.5;
    doc["dt"] = 0.005;
    doc["seed"] = 42;
    doc["functional"] = Json::array({Json::array({1.0, 0.0, 0.0})});
    doc["tolerances"] = Json{{"route_rel", 0.02}};
    doc["label"] = "fixed";
    ExperimentConfig cfg = config_from_json(doc);

    Json serialized = cfg.to_json();
    ExperimentConfig reloaded = config_from_json(serialized);
    CHECK(reloaded.to_json() == serialized);
    CHECK(reloaded.seed == 42);
    CHECK(reloaded.dt == 0.005);
    CHECK(reloaded.tol.route_rel == 0.02);
    CHECK(reloaded.label == "fixed");

    // Manifests wrap the config under "command"/"config"; loading unwraps.
    Json manifest;
    manifest["command"] = "flow-check";
    manifest["config"] = serialized;
    ExperimentConfig from_manifest = config_from_json(manifest);
    CHECK(from_manifest.to_json() == serialized);

    auto path = write_temp("hypolab_cfg_manifest.json", manifest.dump(2));
    ExperimentConfig from_file = load_config_file(path.string());
    CHECK(from_file.to_json() == serialized);
    std::filesystem::remove(path);
}
