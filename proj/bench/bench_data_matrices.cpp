// Serial reference vs OpenMP kernel for the per-sample data integrals.

#include "netlqr/benchmarks.hpp"

#include <benchmark/benchmark.h>

namespace {

netlqr::SnapshotRecord make_record(long nodes) {
    netlqr::ConsensusConfig cfg;
    cfg.area_sizes = {nodes / 5, nodes - nodes / 5};
    cfg.seed = 3;
    const netlqr::BenchmarkProblem p = netlqr::gen_consensus(cfg);
    netlqr::NoiseConfig noise;
    noise.num_inputs = p.sys.m();
    return netlqr::simulate(p.sys, netlqr::exploration_noise(noise), p.x0, netlqr::TimeGrid::uniform(0.01, 400, 10));
}

void BM_Reference(benchmark::State& state) {
    const netlqr::SnapshotRecord rec = make_record(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(netlqr::build_data_matrices_reference(rec));
    }
}

void BM_Parallel(benchmark::State& state) {
    const netlqr::SnapshotRecord rec = make_record(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(netlqr::build_data_matrices(rec));
    }
}

}  // namespace

BENCHMARK(BM_Reference)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
