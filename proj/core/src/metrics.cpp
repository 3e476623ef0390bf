#include "cloudsched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "cloudsched/error.hpp"

namespace cloudsched::metrics {

double time_cost(const sim::SimTrace& trace) {
    if (trace.tasks.empty()) throw PreconditionError("time cost of an empty trace");
    double sum = 0.0;
    for (const auto& r : trace.tasks) sum += r.completion - r.arrival;
    return sum / static_cast<double>(trace.tasks.size());
}

double money_cost(const sim::SimTrace& trace, std::span<const VmSpec> specs) {
    if (trace.tasks.empty()) return 0.0;
    std::map<MachineId, const VmSpec*> by_id;
    for (const VmSpec& vm : specs) by_id.emplace(vm.id, &vm);
    double sum = 0.0;
    for (const auto& r : trace.tasks) {
        auto it = by_id.find(r.machine_id);
        if (it == by_id.end()) throw ValidationError("no spec for machine " + std::to_string(r.machine_id));
        sum += r.exec_s * it->second->instr_cost_rate + r.transfer_s * it->second->bw_cost_rate;
    }
    return sum / static_cast<double>(trace.tasks.size());
}

double reliability(const sim::SimTrace& trace) {
    std::size_t with_deadline = 0;
    std::size_t met = 0;
    for (const auto& r : trace.tasks) {
        if (!r.deadline) continue;
        ++with_deadline;
        if (r.met_deadline()) ++met;
    }
    if (with_deadline == 0) return 1.0;
    return static_cast<double>(met) / static_cast<double>(with_deadline);
}

std::string_view to_string(LoadFormula f) { return f == LoadFormula::imbalance ? "imbalance" : "literal"; }

LoadFormula parse_load_formula(std::string_view name) {
    if (name == "imbalance") return LoadFormula::imbalance;
    if (name == "literal") return LoadFormula::literal;
    throw ConfigError("unknown load formula '" + std::string(name) + "' (expected imbalance|literal)");
}

std::string_view to_string(LoadBasis b) { return b == LoadBasis::task_count ? "task_count" : "busy_time"; }

LoadBasis parse_load_basis(std::string_view name) {
    if (name == "task_count") return LoadBasis::task_count;
    if (name == "busy_time") return LoadBasis::busy_time;
    throw ConfigError("unknown load basis '" + std::string(name) + "' (expected task_count|busy_time)");
}

std::vector<double> machine_usage(const sim::SimTrace& trace, LoadBasis basis) {
    std::vector<double> use;
    use.reserve(trace.machines.size());
    for (const auto& m : trace.machines) {
        use.push_back(basis == LoadBasis::task_count ? static_cast<double>(m.task_count) : m.busy_time);
    }
    return use;
}

double load_rate(std::span<const double> usage, LoadFormula formula) {
    if (usage.empty()) return 0.0;
    const double n = static_cast<double>(usage.size());
    const double avg = std::accumulate(usage.begin(), usage.end(), 0.0) / n;
    if (!(avg > 0.0)) return 0.0;
    if (formula == LoadFormula::literal) {
        return *std::max_element(usage.begin(), usage.end()) / (avg * n);
    }
    double dev = 0.0;
    for (double u : usage) dev += std::abs(u - avg);
    return dev / (avg * n);
}

void QosWeights::validate() const {
    if (time < 0.0 || cost < 0.0 || reliability < 0.0) throw ConfigError("QoS weights must be >= 0");
    const double sum = time + cost + reliability;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("QoS weights must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

QosBounds QosBounds::of_pool(std::span<const QosPoint> pool) {
    QosBounds b;
    if (pool.empty()) return b;
    b.time_lo = b.time_hi = pool.front().time;
    b.cost_lo = b.cost_hi = pool.front().cost;
    for (const QosPoint& p : pool) {
        b.time_lo = std::min(b.time_lo, p.time);
        b.time_hi = std::max(b.time_hi, p.time);
        b.cost_lo = std::min(b.cost_lo, p.cost);
        b.cost_hi = std::max(b.cost_hi, p.cost);
    }
    return b;
}

double qos_score(const QosPoint& p, const QosBounds& b, const QosWeights& w) {
    auto norm = [](double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 0.0; };
    return w.time * norm(p.time, b.time_lo, b.time_hi) + w.cost * norm(p.cost, b.cost_lo, b.cost_hi) +
           w.reliability * (1.0 - p.reliability);
}

std::vector<double> multi_qos(std::span<const QosPoint> pool, const QosWeights& weights) {
    weights.validate();
    const QosBounds bounds = QosBounds::of_pool(pool);
    std::vector<double> scores;
    scores.reserve(pool.size());
    for (const QosPoint& p : pool) scores.push_back(qos_score(p, bounds, weights));
    return scores;
}

QosPoint qos_point(const sim::SimTrace& trace, std::span<const VmSpec> specs) {
    return {time_cost(trace), money_cost(trace, specs), reliability(trace)};
}

std::vector<double> multi_qos(std::span<const sim::SimTrace> pool, std::span<const VmSpec> specs,
                              const QosWeights& weights) {
    std::vector<QosPoint> points;
    points.reserve(pool.size());
    for (const auto& t : pool) points.push_back(qos_point(t, specs));
    return multi_qos(points, weights);
}

MetricReport evaluate(const sim::SimTrace& trace, std::span<const VmSpec> specs, LoadFormula formula,
                      LoadBasis basis) {
    MetricReport r;
    r.avg_time_cost = time_cost(trace);
    r.avg_money_cost = money_cost(trace, specs);
    r.reliability = reliability(trace);
    const auto use = machine_usage(trace, basis);
    r.load_rate = load_rate(use, formula);
    return r;
}

}  // namespace cloudsched::metrics
