#include <benchmark/benchmark.h>

#include "support/toy_target.hpp"

using namespace promptlab;
using namespace promptlab::testing;

static void BM_AttackCharacter(benchmark::State& state) {
    ModelGateway gateway;
    gateway.register_rulebook("keyword", keyword_rulebook());
    AttackEngine engine(gateway, toy_tables());
    AttackConfig config;
    config.level = AttackLevel::character;
    config.query_budget = static_cast<int>(state.range(0));
    config.eval_subset_size = 4;
    config.seed = 1;
    const auto records = toy_records();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            engine.attack(toy_target(), config, toy_endpoint("keyword"), {}, records));
    }
}
BENCHMARK(BM_AttackCharacter)->Arg(4)->Arg(16)->Arg(64);

static void BM_MockScoring(benchmark::State& state) {
    ModelGateway gateway;
    gateway.register_rulebook("keyword", keyword_rulebook());
    AttackEngine engine(gateway, toy_tables());
    const auto records = toy_records();
    const AttackTarget target = toy_target();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            engine.score_prompt(target, {}, toy_endpoint("keyword"), {}, records));
    }
}
BENCHMARK(BM_MockScoring);
