#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cloudsched/metrics.hpp"
#include "cloudsched/policy.hpp"
#include "cloudsched/reward.hpp"
#include "cloudsched/rl_env.hpp"
#include "cloudsched/schedulers.hpp"
#include "cloudsched/workload.hpp"

namespace cloudsched::experiment {

enum class SchedulerKind { gaaco, aco, sa, eft, rl };

std::string_view to_string(SchedulerKind kind);
SchedulerKind parse_scheduler_kind(std::string_view name);

struct SchedulerSpec {
    std::string name;  ///< label in results; defaults to the kind name
    SchedulerKind kind = SchedulerKind::gaaco;
    sched::GaacoParams gaaco;
    sched::AcoParams aco;
    sched::SaParams sa;
    std::filesystem::path policy;  ///< rl only: theta file written by `bench train`
};

struct Sweep {
    std::size_t start = 10;
    std::size_t stop = 100;
    std::size_t step = 10;

    std::vector<std::size_t> counts() const;
};

struct TrainSection {
    rl::TrainConfig config;
    std::size_t task_count = 20;
    std::size_t ready_slots = 4;
    std::size_t lookahead = 4;
    std::size_t step_cap_factor = 10;
};

struct ExperimentConfig {
    WorkloadGenConfig workload;
    std::vector<SchedulerSpec> schedulers;
    Sweep sweep;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    metrics::QosWeights weights;
    reward::RewardConfig reward;
    metrics::LoadFormula load_formula = metrics::LoadFormula::imbalance;
    metrics::LoadBasis load_basis = metrics::LoadBasis::task_count;
    std::filesystem::path output_dir = "results";
    TrainSection train;

    /// Default sweep with GAACO, ACO and SA.
    static ExperimentConfig defaults();
    /// Throws ConfigError on an empty sweep, no seeds, no schedulers or duplicate names.
    void validate() const;
    rl::EncoderConfig encoder() const;
    rl::EnvConfig env() const;
};

/// JSON document; every key is optional and unknown keys are rejected.
/// Relative policy paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ResultRow {
    std::string algorithm;
    std::size_t task_count = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double avg_time_cost = 0.0;
    double avg_money_cost = 0.0;
    double multi_qos = 0.0;
    double load_rate = 0.0;
    double reliability = 1.0;
    double wall_clock_s = 0.0;  ///< not written to results.csv
};

/// Instance for one (task count, seed) cell; shared by every scheduler.
WorkloadSet cell_workload(const ExperimentConfig& config, std::size_t task_count, std::uint64_t seed);

/// Schedules and simulates. `policy` is required for rl specs.
sim::SimTrace run_scheduler(const SchedulerSpec& spec, const WorkloadSet& workload, std::uint64_t seed,
                            const metrics::QosWeights& weights, const rl::LoadedPolicy* policy = nullptr);

/// Every (scheduler, task count, seed) cell, `jobs` at a time. Rows are sorted
/// by (task count, seed, scheduler order). multiQoS is normalized over the
/// successful schedulers of each (task count, seed) pool. A failing cell is
/// reported with ok = false and does not affect the others. Progress lines go
/// to `progress` when given.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, std::size_t jobs = 1,
                                      std::ostream* progress = nullptr);

/// Trains on fresh workloads of `train.task_count` tasks drawn per episode.
rl::TrainResult train_policy(const ExperimentConfig& config);

}  // namespace cloudsched::experiment
