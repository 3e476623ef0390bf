#include "cloudsched/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "cloudsched/error.hpp"
#include "cloudsched/rng.hpp"

namespace cloudsched {

namespace {

bool finite(double x) { return std::isfinite(x); }

std::unordered_map<TaskId, std::size_t> index_tasks(std::span<const Task> tasks) {
    std::unordered_map<TaskId, std::size_t> index;
    index.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!index.emplace(tasks[i].id, i).second) {
            throw ValidationError("duplicate task id " + std::to_string(tasks[i].id));
        }
    }
    return index;
}

}  // namespace

std::string_view to_string(ResourceKind kind) {
    switch (kind) {
        case ResourceKind::cpu: return "cpu";
        case ResourceKind::memory: return "memory";
        case ResourceKind::bandwidth: return "bandwidth";
    }
    return "unknown";
}

ResourceKind parse_resource_kind(std::string_view name) {
    for (ResourceKind k : kAllResources) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown resource kind '" + std::string(name) + "'");
}

std::string_view to_string(ProfileShape shape) {
    switch (shape) {
        case ProfileShape::flat: return "flat";
        case ProfileShape::diurnal: return "diurnal";
        case ProfileShape::spike: return "spike";
    }
    return "unknown";
}

ProfileShape parse_profile_shape(std::string_view name) {
    if (name == "flat") return ProfileShape::flat;
    if (name == "diurnal") return ProfileShape::diurnal;
    if (name == "spike") return ProfileShape::spike;
    throw ConfigError("unknown profile shape '" + std::string(name) + "'");
}

void Task::validate() const {
    const std::string who = "task " + std::to_string(id);
    if (!(length_mi > 0.0) || !finite(length_mi)) throw ValidationError(who + ": length must be > 0");
    if (!(input_mb >= 0.0) || !(output_mb >= 0.0) || !finite(input_mb) || !finite(output_mb)) {
        throw ValidationError(who + ": data sizes must be >= 0");
    }
    if (!(arrival >= 0.0) || !finite(arrival)) throw ValidationError(who + ": arrival must be >= 0");
    if (deadline && !(*deadline > arrival)) throw ValidationError(who + ": deadline must be after arrival");
}

void VmSpec::validate() const {
    const std::string who = "vm " + std::to_string(id);
    if (cpu_count <= 0 || !(mips > 0.0) || !(memory_mb > 0.0) || !(bandwidth_mbps > 0.0) || !(storage_gb > 0.0)) {
        throw ValidationError(who + ": all capacities must be > 0");
    }
    if (!(instr_cost_rate >= 0.0) || !(bw_cost_rate >= 0.0)) {
        throw ValidationError(who + ": cost rates must be >= 0");
    }
}

void UsageProfile::validate() const {
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (!(series[s] >= 0.0 && series[s] <= 1.0)) {
            throw ValidationError("profile of user " + std::to_string(user_id) + " (" +
                                  std::string(to_string(kind)) + "): slot " + std::to_string(s) +
                                  " outside [0,1]");
        }
    }
}

DagReport validate_dag(const DagWorkflow& dag) {
    const auto index = index_tasks(dag.tasks);
    const std::size_t n = dag.tasks.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const Edge& e : dag.edges) {
        auto from = index.find(e.from);
        auto to = index.find(e.to);
        if (from == index.end() || to == index.end()) {
            const TaskId missing = from == index.end() ? e.from : e.to;
            throw ValidationError("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                                  ") references missing task id " + std::to_string(missing));
        }
        adj[from->second].push_back(to->second);
    }

    // Iterative three-colour DFS; the grey path is the current stack.
    enum : std::uint8_t { white, grey, black };
    std::vector<std::uint8_t> colour(n, white);
    std::vector<std::size_t> path;
    std::vector<std::size_t> cursor(n, 0);
    for (std::size_t root = 0; root < n; ++root) {
        if (colour[root] != white) continue;
        path.push_back(root);
        colour[root] = grey;
        while (!path.empty()) {
            const std::size_t u = path.back();
            if (cursor[u] < adj[u].size()) {
                const std::size_t v = adj[u][cursor[u]++];
                if (colour[v] == white) {
                    colour[v] = grey;
                    path.push_back(v);
                } else if (colour[v] == grey) {
                    DagReport report{false, {}};
                    auto start = std::find(path.begin(), path.end(), v);
                    for (auto it = start; it != path.end(); ++it) report.cycle.push_back(dag.tasks[*it].id);
                    return report;
                }
            } else {
                colour[u] = black;
                path.pop_back();
            }
        }
    }
    return {};
}

PrecedenceIndex::PrecedenceIndex(std::span<const Task> tasks, std::span<const Edge> edges)
    : predecessors(tasks.size()), successors(tasks.size()) {
    const auto index = index_tasks(tasks);
    for (const Edge& e : edges) {
        auto from = index.find(e.from);
        auto to = index.find(e.to);
        if (from == index.end() || to == index.end()) {
            throw ValidationError("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                                  ") references missing task id " +
                                  std::to_string(from == index.end() ? e.from : e.to));
        }
        predecessors[to->second].push_back(from->second);
        successors[from->second].push_back(to->second);
    }
}

std::vector<std::size_t> topological_order(std::span<const Task> tasks, std::span<const Edge> edges) {
    PrecedenceIndex prec(tasks, edges);
    std::vector<std::size_t> indegree(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) indegree[i] = prec.predecessors[i].size();

    auto later = [&](std::size_t a, std::size_t b) {
        if (tasks[a].arrival != tasks[b].arrival) return tasks[a].arrival > tasks[b].arrival;
        return tasks[a].id > tasks[b].id;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> open(later);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (indegree[i] == 0) open.push(i);
    }
    std::vector<std::size_t> order;
    order.reserve(tasks.size());
    while (!open.empty()) {
        const std::size_t u = open.top();
        open.pop();
        order.push_back(u);
        for (std::size_t v : prec.successors[u]) {
            if (--indegree[v] == 0) open.push(v);
        }
    }
    if (order.size() != tasks.size()) throw ValidationError("precedence graph contains a cycle");
    return order;
}

void WorkloadSet::validate() const {
    if (!(slot_width > 0.0)) throw ValidationError("slot width must be > 0");
    std::unordered_set<MachineId> vm_ids;
    for (const VmSpec& vm : vms) {
        vm.validate();
        if (!vm_ids.insert(vm.id).second) throw ValidationError("duplicate vm id " + std::to_string(vm.id));
    }
    std::unordered_set<UserId> users;
    for (const Task& t : tasks) {
        t.validate();
        users.insert(t.user_id);
    }
    DagReport report = validate_dag(DagWorkflow{tasks, edges});
    if (!report.ok) {
        std::string ids;
        for (TaskId id : report.cycle) ids += (ids.empty() ? "" : ",") + std::to_string(id);
        throw ValidationError("precedence cycle through tasks {" + ids + "}");
    }
    std::unordered_set<std::uint64_t> seen;
    std::size_t horizon = 0;
    for (const UsageProfile& p : profiles) {
        p.validate();
        if (!users.contains(p.user_id)) {
            throw ValidationError("profile user " + std::to_string(p.user_id) + " has no tasks");
        }
        if (p.series.empty()) throw ValidationError("profile of user " + std::to_string(p.user_id) + " is empty");
        if (horizon == 0) horizon = p.series.size();
        if (p.series.size() != horizon) throw ValidationError("profiles must share one horizon length");
        const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.user_id)) << 8) |
                                  static_cast<std::uint64_t>(index_of(p.kind));
        if (!seen.insert(key).second) {
            throw ValidationError("duplicate profile for user " + std::to_string(p.user_id) + " (" +
                                  std::string(to_string(p.kind)) + ")");
        }
    }
}

std::span<const double> WorkloadSet::profile_series(UserId user, ResourceKind kind) const {
    for (const UsageProfile& p : profiles) {
        if (p.user_id == user && p.kind == kind) return p.series;
    }
    return {};
}

WorkloadSet WorkloadSet::from_dags(std::vector<VmSpec> vms, std::span<const DagWorkflow> dags,
                                   std::vector<UsageProfile> profiles) {
    WorkloadSet w;
    w.vms = std::move(vms);
    w.profiles = std::move(profiles);
    for (const DagWorkflow& d : dags) {
        w.tasks.insert(w.tasks.end(), d.tasks.begin(), d.tasks.end());
        w.edges.insert(w.edges.end(), d.edges.begin(), d.edges.end());
    }
    w.validate();
    return w;
}

void Range::validate(std::string_view name) const {
    if (!finite(min) || !finite(max)) throw ConfigError(std::string(name) + ": range bounds must be finite");
    if (min > max) {
        throw ConfigError(std::string(name) + ": invalid range, min " + std::to_string(min) + " > max " +
                          std::to_string(max));
    }
}

void GenParams::validate() const {
    length.validate("length");
    input.validate("input");
    output.validate("output");
    if (!(length.min > 0.0)) throw ConfigError("length: minimum must be > 0");
    if (input.min < 0.0 || output.min < 0.0) throw ConfigError("data sizes must be >= 0");
    if (!(mean_interarrival >= 0.0)) throw ConfigError("mean_interarrival must be >= 0");
    if (users < 1) throw ConfigError("users must be >= 1");
    if (deadline_slack) {
        deadline_slack->validate("deadline_slack");
        if (!(deadline_slack->min > 0.0)) throw ConfigError("deadline_slack: minimum must be > 0");
    }
    if (!(reference_mips > 0.0)) throw ConfigError("reference_mips must be > 0");
}

std::vector<Task> generate_tasks(std::size_t n, std::uint64_t seed, const GenParams& params) {
    params.validate();
    Rng rng(seed);
    auto draw = [&rng](const Range& r) {
        return r.min == r.max ? r.min : std::uniform_real_distribution<double>(r.min, r.max)(rng);
    };
    std::vector<Task> tasks;
    tasks.reserve(n);
    double clock = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Task t;
        t.id = static_cast<TaskId>(i);
        t.user_id = static_cast<UserId>(i % static_cast<std::size_t>(params.users));
        t.length_mi = draw(params.length);
        t.input_mb = draw(params.input);
        t.output_mb = draw(params.output);
        if (params.mean_interarrival > 0.0 && i > 0) {
            clock += std::exponential_distribution<double>(1.0 / params.mean_interarrival)(rng);
        }
        t.arrival = clock;
        if (params.deadline_slack) {
            t.deadline = t.arrival + draw(*params.deadline_slack) * t.length_mi / params.reference_mips;
        }
        tasks.push_back(t);
    }
    return tasks;
}

void ProfileParams::validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(level) || !in_unit(base) || !in_unit(peak)) throw ConfigError("profile levels must lie in [0,1]");
    if (shape == ProfileShape::diurnal && !(peak > base)) throw ConfigError("diurnal peak must exceed base");
    if (!(noise >= 0.0)) throw ConfigError("profile noise must be >= 0");
    if (shape == ProfileShape::diurnal && !(noise < (peak - base) / 2.0)) {
        throw ConfigError("profile noise must stay below half the peak/base gap");
    }
    if (kinds.empty()) throw ConfigError("profile kinds must be nonempty");
}

std::vector<UsageProfile> generate_profiles(std::size_t users, std::size_t horizon, std::uint64_t seed,
                                            const ProfileParams& params) {
    if (horizon == 0) throw ConfigError("profile horizon T must be >= 1");
    params.validate();
    const std::size_t period = params.period == 0 ? horizon : params.period;
    const std::size_t window = params.window == 0 ? std::max<std::size_t>(1, period / 4) : params.window;
    if (window >= period) throw ConfigError("diurnal peak window must be shorter than the period");

    Rng rng(seed);
    std::vector<std::size_t> spike_slots(horizon);
    std::iota(spike_slots.begin(), spike_slots.end(), std::size_t{0});
    std::shuffle(spike_slots.begin(), spike_slots.end(), rng);

    std::vector<UsageProfile> out;
    out.reserve(users * params.kinds.size());
    for (std::size_t u = 0; u < users; ++u) {
        const std::size_t phase = uniform_index(rng, period);
        for (ResourceKind kind : params.kinds) {
            UsageProfile p{static_cast<UserId>(u), kind, std::vector<double>(horizon, 0.0)};
            for (std::size_t s = 0; s < horizon; ++s) {
                double v = 0.0;
                switch (params.shape) {
                    case ProfileShape::flat: v = params.level; break;
                    case ProfileShape::diurnal: {
                        const std::size_t offset = (s % period + period - phase) % period;
                        v = offset < window ? params.peak : params.base;
                        if (params.noise > 0.0) {
                            v += std::uniform_real_distribution<double>(-params.noise, params.noise)(rng);
                        }
                        break;
                    }
                    case ProfileShape::spike: v = s == spike_slots[u % horizon] ? params.peak : 0.0; break;
                }
                p.series[s] = std::clamp(v, 0.0, 1.0);
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<VmSpec> make_vms(std::size_t count, const VmSpec& prototype) {
    std::vector<VmSpec> vms(count, prototype);
    for (std::size_t i = 0; i < count; ++i) vms[i].id = static_cast<MachineId>(i);
    return vms;
}

void WorkloadGenConfig::validate() const {
    if (vm_count == 0) throw ConfigError("vm_count must be >= 1");
    vm.validate();
    tasks.validate();
    if (with_profiles) {
        if (horizon == 0) throw ConfigError("profile horizon T must be >= 1");
        profiles.validate();
    }
}

WorkloadSet make_workload(std::size_t n, std::uint64_t seed, const WorkloadGenConfig& config) {
    config.validate();
    WorkloadSet w;
    w.vms = make_vms(config.vm_count, config.vm);
    w.tasks = generate_tasks(n, derive_seed(seed, {1}), config.tasks);
    if (config.with_profiles && n > 0) {
        const std::size_t users = std::min<std::size_t>(static_cast<std::size_t>(config.tasks.users), n);
        w.profiles = generate_profiles(users, config.horizon, derive_seed(seed, {2}), config.profiles);
    }
    w.validate();
    return w;
}

}  // namespace cloudsched
