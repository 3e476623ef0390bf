#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "cloudsched/evaluator.hpp"
#include "cloudsched/metrics.hpp"
#include "cloudsched/rng.hpp"
#include "cloudsched/sim.hpp"
#include "cloudsched/workload.hpp"

namespace cloudsched::sched {

/// Genetic ant colony parameters. Defaults are the published parameter table.
struct GaacoParams {
    std::size_t evolution_num = 100;  ///< generations
    std::size_t population = 10;
    std::size_t ants = 31;            ///< m
    double pc = 0.35;                 ///< crossover probability
    double pm = 0.08;                 ///< maximum mutation probability
    double alpha_max = 1.00;          ///< maximum pheromone factor
    double beta_max = 2.00;           ///< maximum expected (heuristic) factor
    double rho_max = 0.10;            ///< maximum evaporation coefficient
    double q = 50.00;                 ///< maximum pheromone intensity
    std::size_t refine_sweeps = 20;   ///< cap on local-improvement sweeps applied to a new elite
    double balance_weight = 0.01;     ///< task-count balance term of the default fitness

    void validate() const;
};

/// Max-min ant system baseline.
struct AcoParams {
    std::size_t ants = 10;
    std::size_t iterations = 50;
    double alpha = 1.0;
    double beta = 2.0;
    double rho = 0.1;
    double q = 1.0;
    double tau_min = 0.01;
    double tau_max = 10.0;

    void validate() const;
};

/// swap exchanges the machines of two tasks starting from a round-robin
/// spread, so per-machine task counts never change; reassign moves one task
/// from a random start.
enum class SaNeighborhood { swap, reassign };

struct SaParams {
    double initial_temp = 0.1;
    double cooling_rate = 0.95;
    std::size_t steps_per_temp = 100;
    double min_temp = 1e-5;
    SaNeighborhood neighborhood = SaNeighborhood::swap;

    void validate() const;
};

void print_params(std::ostream& out, const GaacoParams& p);
void print_params(std::ostream& out, const AcoParams& p);
void print_params(std::ostream& out, const SaParams& p);

struct ScheduleResult {
    sim::Assignment assignment;
    std::vector<std::size_t> genes;  ///< vm position per task position
    double fitness = 0.0;
    Evaluation evaluation;
    /// Best objective after each generation / iteration / temperature level.
    std::vector<double> history;
    std::size_t evaluations = 0;
};

/// Pool-normalized multiQoS penalty of each candidate (shared with metrics::multi_qos).
std::vector<double> fitness(std::span<const sim::Assignment> pool, const WorkloadSet& workload,
                            const metrics::QosWeights& weights);

/// Called after every ACO pheromone update with the row-major tau matrix (task x vm).
using PheromoneObserver = std::function<void(std::size_t iteration, std::span<const double> tau)>;

ScheduleResult aco_schedule(const WorkloadSet& workload, const AcoParams& params, std::uint64_t seed);
ScheduleResult aco_schedule(const WorkloadSet& workload, const AcoParams& params, std::uint64_t seed,
                            const Objective& objective, const PheromoneObserver& observer = {});

/// Metropolis rule: downhill always, uphill with probability exp(-delta / temperature).
bool sa_accept(double delta, double temperature, Rng& rng);

ScheduleResult sa_schedule(const WorkloadSet& workload, const SaParams& params, std::uint64_t seed);
ScheduleResult sa_schedule(const WorkloadSet& workload, const SaParams& params, std::uint64_t seed,
                           const Objective& objective);

/// GA chromosomes (task -> vm vectors) evolve each generation; the GA elite lays
/// pheromone, then ants build assignments biased by tau^alpha * eta^beta with
/// eta = 1 / estimated completion time. The "maximum" parameters bound linearly
/// self-adapting schedules over the run.
/// Anchored multiQoS plus params.balance_weight times the task-count imbalance.
Objective gaaco_objective(const ScheduleEvaluator& evaluator, const metrics::QosWeights& weights,
                          const GaacoParams& params);

ScheduleResult gaaco_schedule(const WorkloadSet& workload, const GaacoParams& params, std::uint64_t seed);
ScheduleResult gaaco_schedule(const WorkloadSet& workload, const GaacoParams& params, std::uint64_t seed,
                              const Objective& objective);

/// Earliest-completion-time list scheduling in topological (arrival, id) order.
ScheduleResult eft_schedule(const WorkloadSet& workload);

/// Exhaustive search; first optimum in lexicographic gene order wins ties.
/// Throws SizeError when vms^tasks exceeds 10^6.
ScheduleResult brute_force_schedule(const WorkloadSet& workload, const Objective& objective);

}  // namespace cloudsched::sched
