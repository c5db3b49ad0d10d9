#include <benchmark/benchmark.h>

#include "hypolab/density.hpp"

using namespace hypolab;

namespace {

struct Fixture {
    ModelSpec model;
    TimeGrid grid;
    BrownianPath path;
    SolutionPath X;
    FlowBundle flows;

    explicit Fixture(const std::string& name, int steps)
        : model(zoo(name)),
          grid(model.default_horizon, steps),
          path(sample_brownian(20240814, 0, grid, model.m())),
          X(solve_mild(model, path)),
          flows(solve_flows(model, X, path, Formulation::conjugated)) {}
};

}  // namespace

static void BM_solve_mild(benchmark::State& state) {
    ModelSpec model = zoo("heat_mult");
    TimeGrid grid(model.default_horizon, static_cast<int>(state.range(0)));
    BrownianPath path = sample_brownian(20240814, 0, grid, model.m());
    for (auto _ : state) {
        SolutionPath X = solve_mild(model, path);
        benchmark::DoNotOptimize(X.at(grid.steps));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_solve_mild)->Arg(200)->Arg(1000);

static void BM_solve_flows(benchmark::State& state) {
    Fixture f("heat_mult", static_cast<int>(state.range(0)));
    for (auto _ : state) {
        FlowBundle flows = solve_flows(f.model, f.X, f.path, Formulation::conjugated);
        benchmark::DoNotOptimize(flows.Z.back());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_solve_flows)->Arg(200)->Arg(1000);

static void BM_covariance(benchmark::State& state) {
    Fixture f("heat_mult", static_cast<int>(state.range(0)));
    Mat F = Mat::Identity(2, f.model.n());
    for (auto _ : state) {
        CovarianceReport report = covariance(f.model, f.X, f.flows, F);
        benchmark::DoNotOptimize(report.min_eigenvalue);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_covariance)->Arg(200)->Arg(1000);

static void BM_corrected_bracket(benchmark::State& state) {
    ModelSpec model = zoo("heat_mult");
    const VectorField& column = model.diffusion.columns[0];
    Vec x = model.initial_x;
    for (auto _ : state) {
        Vec value = corrected_bracket(model, column, x);
        benchmark::DoNotOptimize(value);
    }
}
BENCHMARK(BM_corrected_bracket);

static void BM_hormander_rank(benchmark::State& state) {
    ModelSpec model = zoo("hypo3");
    for (auto _ : state) {
        SpanReport report = hormander_rank(model, model.initial_x, 2);
        benchmark::DoNotOptimize(report.rank);
    }
}
BENCHMARK(BM_hormander_rank);

static void BM_kde(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    GaussianStream g(20240814, 9);
    Mat samples(n, 1);
    for (int i = 0; i < n; ++i) samples(i, 0) = g.normal();
    double h = silverman_bandwidth(samples.col(0));
    Mat points(256, 1);
    points.col(0) = Vec::LinSpaced(256, -4.0, 4.0);
    for (auto _ : state) {
        Vec density = kde(samples, h, points);
        benchmark::DoNotOptimize(density[0]);
    }
    state.SetItemsProcessed(state.iterations() * n * 256);
}
BENCHMARK(BM_kde)->Arg(1000)->Arg(4000);

BENCHMARK_MAIN();
