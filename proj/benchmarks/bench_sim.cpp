#include <benchmark/benchmark.h>

#include "cloudsched/rng.hpp"
#include "cloudsched/sim.hpp"
#include "cloudsched/workload.hpp"

using namespace cloudsched;

static void BM_RunSimulation(benchmark::State& state) {
    const auto w = make_workload(static_cast<std::size_t>(state.range(0)), 2, WorkloadGenConfig{});
    sim::Assignment a;
    for (std::size_t i = 0; i < w.tasks.size(); ++i) a.machine_of[w.tasks[i].id] = w.vms[i % w.vms.size()].id;
    for (auto _ : state) benchmark::DoNotOptimize(sim::run_simulation(w, a));
}
BENCHMARK(BM_RunSimulation)->Arg(10)->Arg(100)->Arg(1000);
