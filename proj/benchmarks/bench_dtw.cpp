#include <benchmark/benchmark.h>

#include <vector>

#include "cloudsched/clustering.hpp"
#include "cloudsched/rng.hpp"

using namespace cloudsched;

static void BM_Dtw(benchmark::State& state) {
    Rng rng(3);
    std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
    for (auto& x : a) x = uniform01(rng);
    for (auto& x : b) x = uniform01(rng);
    for (auto _ : state) benchmark::DoNotOptimize(cluster::dtw_distance(a, b));
}
BENCHMARK(BM_Dtw)->Arg(24)->Arg(96)->Arg(384);
