#include <benchmark/benchmark.h>

#include <random>

#include "cbp/conditions.hpp"
#include "cbp/model.hpp"
#include "cbp/simulate.hpp"

namespace {

cbp::Vec random_vec(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    cbp::Vec x(static_cast<std::size_t>(n));
    for (auto& v : x) v = u(rng);
    return x;
}

void BM_RankPermutation(benchmark::State& state) {
    const auto x = random_vec(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbp::rank_permutation(x));
    }
}
BENCHMARK(BM_RankPermutation)->Arg(8)->Arg(64)->Arg(512);

void BM_PiMax(benchmark::State& state) {
    const auto sigma2 = random_vec(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbp::pi_max(sigma2));
    }
}
BENCHMARK(BM_PiMax)->Arg(4)->Arg(16)->Arg(64);

void BM_NTupleCheck(benchmark::State& state) {
    const auto sigma2 = random_vec(static_cast<int>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbp::no_ntuple_check(sigma2, 4, cbp::Criterion::Cor24));
    }
}
BENCHMARK(BM_NTupleCheck)->Arg(8)->Arg(16)->Arg(32);

void BM_SimulatePath(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    cbp::FiniteSystemSpec spec;
    spec.N = n;
    spec.g.assign(static_cast<std::size_t>(n), 0.0);
    spec.sigma2.assign(static_cast<std::size_t>(n), 1.0);
    for (int i = 0; i < n; ++i) spec.x0.push_back(0.5 * i);

    cbp::SimConfig config;
    config.T = 0.1;
    config.dt = 1e-3;
    config.seed = 4;
    config.track_windows = {{1, std::min(4, n)}};

    std::int64_t path = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cbp::simulate_path(spec, config, path++));
    }
}
BENCHMARK(BM_SimulatePath)->Arg(3)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
