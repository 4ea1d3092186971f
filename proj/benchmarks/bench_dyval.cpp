#include <benchmark/benchmark.h>

#include <promptlab/dyval.hpp>

using namespace promptlab;

static void BM_Generate(benchmark::State& state, DyvalTask task) {
    DyValSpec spec;
    spec.task = task;
    spec.depth = static_cast<int>(state.range(0));
    spec.width = 3;
    spec.extra_links = 3;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        spec.seed = seed++;
        benchmark::DoNotOptimize(generate(spec));
    }
}
BENCHMARK_CAPTURE(BM_Generate, arithmetic, DyvalTask::arithmetic)->Arg(3)->Arg(6);
BENCHMARK_CAPTURE(BM_Generate, abductive, DyvalTask::abductive_logic)->Arg(3)->Arg(6);
BENCHMARK_CAPTURE(BM_Generate, max_sum_path, DyvalTask::max_sum_path)->Arg(3)->Arg(6);

static void BM_VerifyClosure(benchmark::State& state) {
    DyValSpec spec;
    spec.task = DyvalTask::reachability;
    spec.depth = 5;
    spec.width = 3;
    spec.extra_links = 4;
    const auto batch = emit_batch(spec, 50);
    for (auto _ : state) {
        for (const auto& sample : batch) benchmark::DoNotOptimize(verify_sample(sample));
    }
}
BENCHMARK(BM_VerifyClosure);
