#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cloudsched/metrics.hpp"
#include "cloudsched/sim.hpp"
#include "cloudsched/workload.hpp"

namespace cloudsched::sched {

/// Raw outcome of one candidate assignment.
struct Evaluation {
    double flow_time = 0.0;  ///< mean completion - arrival
    double money_cost = 0.0;  ///< mean per task
    double reliability = 1.0;
    double makespan = 0.0;
    double task_balance = 0.0;  ///< imbalance of per-vm task counts, as metrics::load_rate

    metrics::QosPoint qos() const { return {flow_time, money_cost, reliability}; }
};

/// Scores position-indexed gene vectors (gene[i] = vm position for task i)
/// without building a full trace. Independent-task instances use a closed-form
/// FIFO replay that matches run_simulation exactly; DAG instances fall back to it.
class ScheduleEvaluator {
public:
    explicit ScheduleEvaluator(const WorkloadSet& workload);

    const WorkloadSet& workload() const { return *workload_; }
    std::size_t task_count() const { return workload_->tasks.size(); }
    std::size_t vm_count() const { return workload_->vms.size(); }

    double duration(std::size_t task, std::size_t vm) const { return duration_[task * vm_count() + vm]; }
    double money(std::size_t task, std::size_t vm) const { return money_[task * vm_count() + vm]; }

    /// Construction order for greedy and ant schedulers: topological, ties by (arrival, id).
    std::span<const std::size_t> order() const { return order_; }

    Evaluation evaluate(std::span<const std::size_t> genes) const;

    sim::Assignment to_assignment(std::span<const std::size_t> genes) const;
    std::vector<std::size_t> to_genes(const sim::Assignment& assignment) const;

private:
    const WorkloadSet* workload_;
    std::vector<double> duration_;
    std::vector<double> money_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> id_order_;
    bool has_edges_ = false;
};

/// Scalar objective minimized by every scheduler.
class Objective {
public:
    enum class Kind { qos, makespan, flow_time, money_cost };

    static Objective qos(const metrics::QosWeights& weights, const metrics::QosBounds& bounds);
    /// QoS normalized against instance-intrinsic references: time between the mean
    /// best-case task duration and the all-on-one-machine flow time; cost between
    /// the mean per-task cheapest and dearest placement.
    static Objective anchored_qos(const ScheduleEvaluator& evaluator, const metrics::QosWeights& weights = {});
    static Objective makespan() { return Objective(Kind::makespan); }
    static Objective flow_time() { return Objective(Kind::flow_time); }
    static Objective money_cost() { return Objective(Kind::money_cost); }

    /// Adds weight * Evaluation::task_balance to the score.
    Objective with_balance(double weight) const;

    Kind kind() const { return kind_; }
    double balance_weight() const { return balance_; }
    const metrics::QosWeights& weights() const { return weights_; }
    const metrics::QosBounds& bounds() const { return bounds_; }

    double operator()(const Evaluation& e) const;

private:
    explicit Objective(Kind kind) : kind_(kind) {}

    Kind kind_;
    metrics::QosWeights weights_{};
    metrics::QosBounds bounds_{};
    double balance_ = 0.0;
};

}  // namespace cloudsched::sched
