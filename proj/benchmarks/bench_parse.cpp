#include <benchmark/benchmark.h>

#include <promptlab/metrics.hpp>
#include <promptlab/text.hpp>

using namespace promptlab;

static void BM_ProcessOutput(benchmark::State& state) {
    const std::vector<std::string> labels{"equivalent", "not_equivalent"};
    const std::map<std::string, std::string> proj{{"equivalent", "equivalent"},
                                                  {"not_equivalent", "not_equivalent"}};
    const std::string raw = "After weighing both sentences, it is not_equivalent in my view.";
    for (auto _ : state) {
        benchmark::DoNotOptimize(process_output(raw, labels, proj));
    }
}
BENCHMARK(BM_ProcessOutput);

static void BM_Normalize(benchmark::State& state) {
    const std::string text(static_cast<std::size_t>(state.range(0)), 'X');
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalize_text(text));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Normalize)->Range(64, 64 << 8)->Complexity();

static void BM_Tokenize(benchmark::State& state) {
    std::string text;
    for (int i = 0; i < state.range(0); ++i) text += "word" + std::to_string(i) + " ";
    for (auto _ : state) {
        benchmark::DoNotOptimize(tokenize_words(text));
    }
}
BENCHMARK(BM_Tokenize)->Range(8, 512);
