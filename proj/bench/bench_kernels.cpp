#include <random>

#include <benchmark/benchmark.h>

#include "densecode/codec.hpp"
#include "densecode/coarse.hpp"
#include "densecode/construction.hpp"

using namespace densecode;

namespace {

Theta corrupted_code(std::size_t n) {
    std::mt19937_64 rng(7);
    Tuple s(n);
    for (auto& v : s) v = uniform_below(rng, 4);
    Theta th = encode(s);
    const std::uint64_t span = ipow(n, n) * ipow(4, n);
    for (int e = 0; e < 3; ++e) {
        const std::uint64_t at = uniform_below(rng, span);
        th.set(at, th.get(at) ^ (std::uint64_t{1} << uniform_below(rng, n)));
    }
    return th;
}

template <DecodeResult (*Decode)(const Theta&)>
void BM_decode(benchmark::State& state) {
    const Theta th = corrupted_code(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(Decode(th));
}

// State after a few dozen stages of the default adversary, with every requirement in R.
struct ViabilityFixture {
    StageState st;
    FunctionalRegistry reg = FunctionalRegistry::default_adversary();
    ViabilityFixture() {
        const auto pi = PiSeq::length_lex(64);
        const auto ls = LSchedule::standard();
        for (int s = 0; s < 40; ++s) stage_step(st, pi, reg, ls);
    }
};

void BM_viability(benchmark::State& state) {
    static const ViabilityFixture fx;
    const bool parallel = state.range(0) != 0;
    for (auto _ : state)
        for (auto& [n, t] : fx.st.R) {
            auto w = parallel ? viability_check(fx.st, t, fx.reg, true) : viability_check_serial(fx.st, t, fx.reg);
            benchmark::DoNotOptimize(w);
        }
    state.SetLabel(parallel ? "parallel" : "serial");
}

void BM_construction(benchmark::State& state) {
    const auto pi = PiSeq::length_lex(100);
    const auto reg = FunctionalRegistry::default_adversary();
    ConstructionConfig cfg;
    cfg.parallel = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(run(pi, reg, LSchedule::standard(), 100, {}, cfg));
    state.SetLabel(cfg.parallel ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_decode<decode_serial>)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_decode<decode_parallel>)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_viability)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_construction)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
