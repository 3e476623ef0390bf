#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "cloudsched/sim.hpp"

namespace cloudsched::metrics {

/// Mean flow time (completion - arrival). Throws PreconditionError on an empty trace.
double time_cost(const sim::SimTrace& trace);

/// Mean per-task money: execution seconds at the instruction rate plus transfer
/// seconds at the bandwidth rate of the machine that ran the task. 0 for an empty trace.
double money_cost(const sim::SimTrace& trace, std::span<const VmSpec> specs);

/// Fraction of tasks completing by their deadline; 1 when no task has one.
double reliability(const sim::SimTrace& trace);

enum class LoadFormula {
    imbalance,  ///< sum_i |use_i - avg| / (avg * n); 0 for an even spread
    literal,    ///< max_i use_i / (avg * n)
};

/// What counts as a machine's "use" for the load rate.
enum class LoadBasis {
    task_count,  ///< tasks assigned to the machine
    busy_time,   ///< seconds spent transferring or executing
};

std::string_view to_string(LoadFormula f);
LoadFormula parse_load_formula(std::string_view name);
std::string_view to_string(LoadBasis b);
LoadBasis parse_load_basis(std::string_view name);

std::vector<double> machine_usage(const sim::SimTrace& trace, LoadBasis basis);

/// 0 for an empty or all-idle usage vector.
double load_rate(std::span<const double> usage, LoadFormula formula = LoadFormula::imbalance);

struct QosWeights {
    double time = 0.5;
    double cost = 0.3;
    double reliability = 0.2;

    /// Nonnegative and summing to 1 within 1e-9, else ConfigError.
    void validate() const;
};

struct QosPoint {
    double time = 0.0;
    double cost = 0.0;
    double reliability = 1.0;
};

/// Min/max of raw time and cost used to normalize into [0,1].
struct QosBounds {
    double time_lo = 0.0;
    double time_hi = 0.0;
    double cost_lo = 0.0;
    double cost_hi = 0.0;

    static QosBounds of_pool(std::span<const QosPoint> pool);
};

/// w_t * T_hat + w_c * C_hat + w_r * (1 - reliability); lower is better. A
/// degenerate axis (hi == lo) normalizes to 0.
double qos_score(const QosPoint& point, const QosBounds& bounds, const QosWeights& weights);

/// Scores every member of `pool` with bounds taken from the pool itself.
std::vector<double> multi_qos(std::span<const QosPoint> pool, const QosWeights& weights);

QosPoint qos_point(const sim::SimTrace& trace, std::span<const VmSpec> specs);
std::vector<double> multi_qos(std::span<const sim::SimTrace> pool, std::span<const VmSpec> specs,
                              const QosWeights& weights);

struct MetricReport {
    double avg_time_cost = 0.0;
    double avg_money_cost = 0.0;
    double multi_qos = 0.0;
    double load_rate = 0.0;
    double reliability = 1.0;
};

/// Everything except multi_qos, which depends on the comparison pool and is left 0.
MetricReport evaluate(const sim::SimTrace& trace, std::span<const VmSpec> specs,
                      LoadFormula formula = LoadFormula::imbalance, LoadBasis basis = LoadBasis::task_count);

}  // namespace cloudsched::metrics
