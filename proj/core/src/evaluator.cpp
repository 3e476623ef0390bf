#include "cloudsched/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "cloudsched/error.hpp"

namespace cloudsched::sched {

ScheduleEvaluator::ScheduleEvaluator(const WorkloadSet& workload) : workload_(&workload) {
    const std::size_t n = workload.tasks.size();
    const std::size_t m = workload.vms.size();
    if (m == 0) throw ValidationError("no virtual machines");
    duration_.resize(n * m);
    money_.resize(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            duration_[i * m + j] = workload.vms[j].duration(workload.tasks[i]);
            money_[i * m + j] = workload.vms[j].money_cost(workload.tasks[i]);
        }
    }
    order_ = topological_order(workload.tasks, workload.edges);
    id_order_.resize(n);
    std::iota(id_order_.begin(), id_order_.end(), std::size_t{0});
    std::sort(id_order_.begin(), id_order_.end(),
              [&](std::size_t a, std::size_t b) { return workload.tasks[a].id < workload.tasks[b].id; });
    has_edges_ = !workload.edges.empty();
}

Evaluation ScheduleEvaluator::evaluate(std::span<const std::size_t> genes) const {
    const std::size_t n = task_count();
    if (genes.size() != n) throw ShapeError("gene vector length does not match task count");
    Evaluation e;
    if (n == 0) return e;
    for (std::size_t g : genes) {
        if (g >= vm_count()) throw ValidationError("gene names vm position " + std::to_string(g));
    }

    std::vector<double> counts(vm_count(), 0.0);
    for (std::size_t g : genes) counts[g] += 1.0;
    e.task_balance = metrics::load_rate(counts);

    if (has_edges_) {
        const sim::SimTrace trace = sim::run_simulation(*workload_, to_assignment(genes));
        e.flow_time = metrics::time_cost(trace);
        e.money_cost = metrics::money_cost(trace, workload_->vms);
        e.reliability = metrics::reliability(trace);
        e.makespan = trace.makespan;
        return e;
    }

    // Without precedence a machine serves its tasks in (arrival, id) order.
    std::vector<double> free_at(vm_count(), 0.0);
    std::vector<double> completion(n);
    for (std::size_t i : order_) {
        const std::size_t vm = genes[i];
        const double start = std::max(workload_->tasks[i].arrival, free_at[vm]);
        completion[i] = start + duration(i, vm);
        free_at[vm] = completion[i];
    }
    double flow = 0.0;
    double money_sum = 0.0;
    std::size_t with_deadline = 0;
    std::size_t met = 0;
    for (std::size_t i : id_order_) {
        const Task& t = workload_->tasks[i];
        flow += completion[i] - t.arrival;
        money_sum += money(i, genes[i]);
        e.makespan = std::max(e.makespan, completion[i]);
        if (t.deadline) {
            ++with_deadline;
            if (completion[i] <= *t.deadline) ++met;
        }
    }
    e.flow_time = flow / static_cast<double>(n);
    e.money_cost = money_sum / static_cast<double>(n);
    e.reliability = with_deadline == 0 ? 1.0 : static_cast<double>(met) / static_cast<double>(with_deadline);
    return e;
}

sim::Assignment ScheduleEvaluator::to_assignment(std::span<const std::size_t> genes) const {
    sim::Assignment a;
    for (std::size_t i = 0; i < genes.size(); ++i) {
        a.machine_of.emplace(workload_->tasks[i].id, workload_->vms.at(genes[i]).id);
    }
    return a;
}

std::vector<std::size_t> ScheduleEvaluator::to_genes(const sim::Assignment& assignment) const {
    std::map<MachineId, std::size_t> pos;
    for (std::size_t j = 0; j < vm_count(); ++j) pos.emplace(workload_->vms[j].id, j);
    std::vector<std::size_t> genes(task_count());
    for (std::size_t i = 0; i < task_count(); ++i) {
        auto it = pos.find(assignment.at(workload_->tasks[i].id));
        if (it == pos.end()) throw ValidationError("assignment names an unknown machine");
        genes[i] = it->second;
    }
    return genes;
}

Objective Objective::qos(const metrics::QosWeights& weights, const metrics::QosBounds& bounds) {
    weights.validate();
    Objective o(Kind::qos);
    o.weights_ = weights;
    o.bounds_ = bounds;
    return o;
}

Objective Objective::anchored_qos(const ScheduleEvaluator& ev, const metrics::QosWeights& weights) {
    metrics::QosBounds b;
    const std::size_t n = ev.task_count();
    if (n == 0) return qos(weights, b);
    std::size_t fastest = 0;
    for (std::size_t j = 1; j < ev.vm_count(); ++j) {
        if (ev.workload().vms[j].mips > ev.workload().vms[fastest].mips) fastest = j;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double d_lo = ev.duration(i, 0);
        double c_lo = ev.money(i, 0);
        double c_hi = c_lo;
        for (std::size_t j = 1; j < ev.vm_count(); ++j) {
            d_lo = std::min(d_lo, ev.duration(i, j));
            c_lo = std::min(c_lo, ev.money(i, j));
            c_hi = std::max(c_hi, ev.money(i, j));
        }
        b.time_lo += d_lo;
        b.cost_lo += c_lo;
        b.cost_hi += c_hi;
    }
    b.time_lo /= static_cast<double>(n);
    b.cost_lo /= static_cast<double>(n);
    b.cost_hi /= static_cast<double>(n);
    const std::vector<std::size_t> serial(n, fastest);
    b.time_hi = std::max(ev.evaluate(serial).flow_time, b.time_lo);
    return qos(weights, b);
}

Objective Objective::with_balance(double weight) const {
    if (!(weight >= 0.0) || !std::isfinite(weight)) throw ConfigError("balance weight must be >= 0");
    Objective o = *this;
    o.balance_ = weight;
    return o;
}

double Objective::operator()(const Evaluation& e) const {
    double base = e.flow_time;
    switch (kind_) {
        case Kind::qos: base = metrics::qos_score(e.qos(), bounds_, weights_); break;
        case Kind::makespan: base = e.makespan; break;
        case Kind::flow_time: base = e.flow_time; break;
        case Kind::money_cost: base = e.money_cost; break;
    }
    return balance_ > 0.0 ? base + balance_ * e.task_balance : base;
}

}  // namespace cloudsched::sched
