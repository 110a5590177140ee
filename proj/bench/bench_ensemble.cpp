// Serial per-track reference against the OpenMP ensemble kernel.

#include <benchmark/benchmark.h>

#include "qtrack/ensemble_builder.hpp"
#include "qtrack/ensemble_kernel.hpp"

using namespace qtrack;

namespace {

RunConfig coupled(std::uint64_t steps, std::uint64_t runs) {
    RunConfig rc;
    rc.regime = Regime::coupled;
    rc.n_steps = steps;
    rc.n_runs = runs;
    rc.master_seed = 1;
    rc.ensemble = build_ohmic_ensemble(rc.main, OhmicConfig{});
    return rc;
}

void BM_coupled_serial(benchmark::State& state) {
    const RunConfig rc = coupled(static_cast<std::uint64_t>(state.range(0)), static_cast<std::uint64_t>(state.range(1)));
    const CoupledModel model = CoupledModel::prepare(rc);
    for (auto _ : state) {
        for (std::uint64_t r = 0; r < rc.n_runs; ++r) benchmark::DoNotOptimize(run_coupled(model, rc, r));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_coupled_kernel(benchmark::State& state) {
    const RunConfig rc = coupled(static_cast<std::uint64_t>(state.range(0)), static_cast<std::uint64_t>(state.range(1)));
    const CoupledModel model = CoupledModel::prepare(rc);
    KernelOptions opt;
    opt.threads = static_cast<int>(state.range(2));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_tracks(rc, &model, 0, rc.n_runs, opt));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_isolated_serial(benchmark::State& state) {
    RunConfig rc;
    rc.n_steps = static_cast<std::uint64_t>(state.range(0));
    rc.n_runs = static_cast<std::uint64_t>(state.range(1));
    for (auto _ : state) {
        for (std::uint64_t r = 0; r < rc.n_runs; ++r) benchmark::DoNotOptimize(run_isolated(rc, r));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_isolated_kernel(benchmark::State& state) {
    RunConfig rc;
    rc.n_steps = static_cast<std::uint64_t>(state.range(0));
    rc.n_runs = static_cast<std::uint64_t>(state.range(1));
    KernelOptions opt;
    opt.threads = static_cast<int>(state.range(2));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_tracks(rc, nullptr, 0, rc.n_runs, opt));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_coupled_crossings(benchmark::State& state) {
    const RunConfig rc = coupled(4774, static_cast<std::uint64_t>(state.range(0)));
    const CoupledModel model = CoupledModel::prepare(rc);
    KernelOptions opt;
    opt.threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_crossings(rc, &model, 5.0, opt));
}

}  // namespace

BENCHMARK(BM_coupled_serial)->Args({1000, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_coupled_kernel)->Args({1000, 16, 1})->Args({1000, 256, 1})->Args({1000, 256, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_isolated_serial)->Args({1000, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_isolated_kernel)->Args({1000, 256, 1})->Args({1000, 256, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_coupled_crossings)->Args({1000, 1})->Args({1000, 4})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
