#include <benchmark/benchmark.h>

#include "cloudsched/schedulers.hpp"
#include "cloudsched/workload.hpp"

using namespace cloudsched;

namespace {

WorkloadSet instance(benchmark::State& state) {
    return make_workload(static_cast<std::size_t>(state.range(0)), 1, WorkloadGenConfig{});
}

void BM_Gaaco(benchmark::State& state) {
    const auto w = instance(state);
    for (auto _ : state) benchmark::DoNotOptimize(sched::gaaco_schedule(w, {}, 1).fitness);
}

void BM_Aco(benchmark::State& state) {
    const auto w = instance(state);
    for (auto _ : state) benchmark::DoNotOptimize(sched::aco_schedule(w, {}, 1).fitness);
}

void BM_Sa(benchmark::State& state) {
    const auto w = instance(state);
    for (auto _ : state) benchmark::DoNotOptimize(sched::sa_schedule(w, {}, 1).fitness);
}

void BM_Eft(benchmark::State& state) {
    const auto w = instance(state);
    for (auto _ : state) benchmark::DoNotOptimize(sched::eft_schedule(w).fitness);
}

}  // namespace

BENCHMARK(BM_Gaaco)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Aco)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sa)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Eft)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);
