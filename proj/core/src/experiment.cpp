#include "cloudsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "cloudsched/error.hpp"
#include "cloudsched/rng.hpp"
#include "json_util.hpp"

namespace cloudsched::experiment {

using detail::get_or;
using detail::json;
using detail::reject_unknown_keys;

std::string_view to_string(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::gaaco: return "gaaco";
        case SchedulerKind::aco: return "aco";
        case SchedulerKind::sa: return "sa";
        case SchedulerKind::eft: return "eft";
        case SchedulerKind::rl: return "rl";
    }
    return "?";
}

SchedulerKind parse_scheduler_kind(std::string_view name) {
    for (auto k : {SchedulerKind::gaaco, SchedulerKind::aco, SchedulerKind::sa, SchedulerKind::eft, SchedulerKind::rl}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown scheduler '" + std::string(name) + "'");
}

std::vector<std::size_t> Sweep::counts() const {
    std::vector<std::size_t> out;
    if (step == 0) return out;
    for (std::size_t n = start; n <= stop; n += step) out.push_back(n);
    return out;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    for (auto k : {SchedulerKind::gaaco, SchedulerKind::aco, SchedulerKind::sa}) {
        SchedulerSpec s;
        s.kind = k;
        s.name = std::string(to_string(k));
        c.schedulers.push_back(s);
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (sweep.step == 0) throw ConfigError("sweep.step must be >= 1");
    if (sweep.start == 0) throw ConfigError("sweep.start must be >= 1");
    if (sweep.counts().empty()) throw ConfigError("sweep is empty (start > stop)");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (schedulers.empty()) throw ConfigError("at least one scheduler is required");
    std::set<std::string> names;
    for (const auto& s : schedulers) {
        if (s.name.empty()) throw ConfigError("scheduler name must be nonempty");
        if (s.name.find_first_of(",\"\n") != std::string::npos) {
            throw ConfigError("scheduler name '" + s.name + "' contains a CSV delimiter");
        }
        if (!names.insert(s.name).second) throw ConfigError("duplicate scheduler name '" + s.name + "'");
        switch (s.kind) {
            case SchedulerKind::gaaco: s.gaaco.validate(); break;
            case SchedulerKind::aco: s.aco.validate(); break;
            case SchedulerKind::sa: s.sa.validate(); break;
            case SchedulerKind::rl:
                if (s.policy.empty()) throw ConfigError("scheduler '" + s.name + "' needs a policy file");
                break;
            case SchedulerKind::eft: break;
        }
    }
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ConfigError("seeds must be distinct");
    workload.validate();
    weights.validate();
    reward.validate();
    train.config.validate();
    encoder().validate();
    if (train.task_count == 0) throw ConfigError("train.task_count must be >= 1");
}

rl::EncoderConfig ExperimentConfig::encoder() const {
    rl::EncoderConfig e;
    e.machines = workload.vm_count;
    e.ready_slots = train.ready_slots;
    e.lookahead = train.lookahead;
    e.length_scale = std::max(workload.tasks.length.max, 1.0);
    e.io_scale = std::max(std::max(workload.tasks.input.max, workload.tasks.output.max), 1.0);
    return e;
}

rl::EnvConfig ExperimentConfig::env() const { return {encoder(), reward, train.step_cap_factor}; }

namespace {

Range parse_range(const json& j, Range fallback, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        throw ConfigError(std::string(where) + "." + key + ": expected [min, max]");
    }
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

std::vector<ResourceKind> parse_kinds(const json& j, std::vector<ResourceKind> fallback, const char* key,
                                      std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_array()) throw ConfigError(std::string(where) + "." + key + ": expected a list");
    std::vector<ResourceKind> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw ConfigError(std::string(where) + "." + key + ": expected resource names");
        out.push_back(parse_resource_kind(v.get<std::string>()));
    }
    return out;
}

VmSpec parse_vm_template(const json& j, VmSpec vm) {
    const char* w = "workload.vm";
    reject_unknown_keys(j,
                        {"cpu_count", "mips", "memory_mb", "bandwidth_mbps", "storage_gb", "instr_cost_rate",
                         "bw_cost_rate"},
                        w);
    vm.cpu_count = get_or(j, "cpu_count", vm.cpu_count, w);
    vm.mips = get_or(j, "mips", vm.mips, w);
    vm.memory_mb = get_or(j, "memory_mb", vm.memory_mb, w);
    vm.bandwidth_mbps = get_or(j, "bandwidth_mbps", vm.bandwidth_mbps, w);
    vm.storage_gb = get_or(j, "storage_gb", vm.storage_gb, w);
    vm.instr_cost_rate = get_or(j, "instr_cost_rate", vm.instr_cost_rate, w);
    vm.bw_cost_rate = get_or(j, "bw_cost_rate", vm.bw_cost_rate, w);
    return vm;
}

GenParams parse_gen(const json& j, GenParams g) {
    const char* w = "workload.tasks";
    reject_unknown_keys(j, {"length", "input", "output", "mean_interarrival", "users", "deadline_slack", "reference_mips"},
                        w);
    g.length = parse_range(j, g.length, "length", w);
    g.input = parse_range(j, g.input, "input", w);
    g.output = parse_range(j, g.output, "output", w);
    g.mean_interarrival = get_or(j, "mean_interarrival", g.mean_interarrival, w);
    g.users = get_or(j, "users", g.users, w);
    if (j.contains("deadline_slack")) {
        if (j["deadline_slack"].is_null()) {
            g.deadline_slack.reset();
        } else {
            g.deadline_slack = parse_range(j, Range{}, "deadline_slack", w);
        }
    }
    g.reference_mips = get_or(j, "reference_mips", g.reference_mips, w);
    return g;
}

ProfileParams parse_profile_params(const json& j, ProfileParams p) {
    const char* w = "workload.profiles";
    reject_unknown_keys(j, {"shape", "level", "base", "peak", "period", "window", "noise", "kinds"}, w);
    if (j.contains("shape")) p.shape = parse_profile_shape(get_or<std::string>(j, "shape", "", w));
    p.level = get_or(j, "level", p.level, w);
    p.base = get_or(j, "base", p.base, w);
    p.peak = get_or(j, "peak", p.peak, w);
    p.period = get_or(j, "period", p.period, w);
    p.window = get_or(j, "window", p.window, w);
    p.noise = get_or(j, "noise", p.noise, w);
    p.kinds = parse_kinds(j, p.kinds, "kinds", w);
    return p;
}

WorkloadGenConfig parse_workload_gen(const json& j) {
    const char* w = "workload";
    reject_unknown_keys(j, {"vm_count", "vm", "tasks", "profiles", "horizon", "with_profiles"}, w);
    WorkloadGenConfig c;
    c.vm_count = get_or(j, "vm_count", c.vm_count, w);
    if (j.contains("vm")) c.vm = parse_vm_template(j["vm"], c.vm);
    if (j.contains("tasks")) c.tasks = parse_gen(j["tasks"], c.tasks);
    if (j.contains("profiles")) c.profiles = parse_profile_params(j["profiles"], c.profiles);
    c.horizon = get_or(j, "horizon", c.horizon, w);
    c.with_profiles = get_or(j, "with_profiles", c.with_profiles, w);
    return c;
}

SchedulerSpec parse_scheduler(const json& j, const std::filesystem::path& base_dir) {
    SchedulerSpec s;
    if (j.is_string()) {
        s.kind = parse_scheduler_kind(j.get<std::string>());
        s.name = std::string(to_string(s.kind));
        if (s.kind == SchedulerKind::rl) throw ConfigError("scheduler 'rl' needs an object with a policy path");
        return s;
    }
    const char* w = "schedulers[]";
    reject_unknown_keys(j, {"type", "name", "params", "policy"}, w);
    s.kind = parse_scheduler_kind(detail::get_required<std::string>(j, "type", w));
    s.name = get_or<std::string>(j, "name", std::string(to_string(s.kind)), w);
    if (j.contains("policy")) {
        std::filesystem::path p = get_or<std::string>(j, "policy", "", w);
        s.policy = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    const json params = j.value("params", json::object());
    const std::string where = "schedulers." + s.name + ".params";
    switch (s.kind) {
        case SchedulerKind::gaaco: {
            reject_unknown_keys(params,
                                {"evolution_num", "population", "ants", "pc", "pm", "alpha_max", "beta_max",
                                 "rho_max", "q", "refine_sweeps", "balance_weight"},
                                where);
            auto& g = s.gaaco;
            g.evolution_num = get_or(params, "evolution_num", g.evolution_num, where);
            g.population = get_or(params, "population", g.population, where);
            g.ants = get_or(params, "ants", g.ants, where);
            g.pc = get_or(params, "pc", g.pc, where);
            g.pm = get_or(params, "pm", g.pm, where);
            g.alpha_max = get_or(params, "alpha_max", g.alpha_max, where);
            g.beta_max = get_or(params, "beta_max", g.beta_max, where);
            g.rho_max = get_or(params, "rho_max", g.rho_max, where);
            g.q = get_or(params, "q", g.q, where);
            g.refine_sweeps = get_or(params, "refine_sweeps", g.refine_sweeps, where);
            g.balance_weight = get_or(params, "balance_weight", g.balance_weight, where);
            break;
        }
        case SchedulerKind::aco: {
            reject_unknown_keys(params, {"ants", "iterations", "alpha", "beta", "rho", "q", "tau_min", "tau_max"},
                                where);
            auto& a = s.aco;
            a.ants = get_or(params, "ants", a.ants, where);
            a.iterations = get_or(params, "iterations", a.iterations, where);
            a.alpha = get_or(params, "alpha", a.alpha, where);
            a.beta = get_or(params, "beta", a.beta, where);
            a.rho = get_or(params, "rho", a.rho, where);
            a.q = get_or(params, "q", a.q, where);
            a.tau_min = get_or(params, "tau_min", a.tau_min, where);
            a.tau_max = get_or(params, "tau_max", a.tau_max, where);
            break;
        }
        case SchedulerKind::sa: {
            reject_unknown_keys(params, {"initial_temp", "cooling_rate", "steps_per_temp", "min_temp", "neighborhood"},
                                where);
            auto& a = s.sa;
            a.initial_temp = get_or(params, "initial_temp", a.initial_temp, where);
            a.cooling_rate = get_or(params, "cooling_rate", a.cooling_rate, where);
            a.steps_per_temp = get_or(params, "steps_per_temp", a.steps_per_temp, where);
            a.min_temp = get_or(params, "min_temp", a.min_temp, where);
            if (params.contains("neighborhood")) {
                const auto nb = get_or<std::string>(params, "neighborhood", "", where);
                if (nb == "swap") {
                    a.neighborhood = sched::SaNeighborhood::swap;
                } else if (nb == "reassign") {
                    a.neighborhood = sched::SaNeighborhood::reassign;
                } else {
                    throw ConfigError(where + ".neighborhood: expected swap or reassign");
                }
            }
            break;
        }
        case SchedulerKind::eft:
        case SchedulerKind::rl:
            reject_unknown_keys(params, {}, where);
            break;
    }
    return s;
}

TrainSection parse_train(const json& j) {
    const char* w = "train";
    reject_unknown_keys(j,
                        {"alpha", "gamma", "episodes", "batch_size", "seed", "baseline", "hidden", "divergence_bound",
                         "task_count", "ready_slots", "lookahead", "step_cap_factor"},
                        w);
    TrainSection t;
    auto& c = t.config;
    c.alpha = get_or(j, "alpha", c.alpha, w);
    c.gamma = get_or(j, "gamma", c.gamma, w);
    c.episodes = get_or(j, "episodes", c.episodes, w);
    c.batch_size = get_or(j, "batch_size", c.batch_size, w);
    c.seed = get_or(j, "seed", c.seed, w);
    if (j.contains("baseline")) c.baseline = rl::parse_baseline(get_or<std::string>(j, "baseline", "", w));
    c.hidden = get_or(j, "hidden", c.hidden, w);
    c.divergence_bound = get_or(j, "divergence_bound", c.divergence_bound, w);
    t.task_count = get_or(j, "task_count", t.task_count, w);
    t.ready_slots = get_or(j, "ready_slots", t.ready_slots, w);
    t.lookahead = get_or(j, "lookahead", t.lookahead, w);
    t.step_cap_factor = get_or(j, "step_cap_factor", t.step_cap_factor, w);
    return t;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json j = detail::parse_json(json_text, "experiment config");
    reject_unknown_keys(j,
                        {"workload", "schedulers", "sweep", "seeds", "weights", "reward", "load_formula", "load_basis",
                         "output_dir", "train"},
                        "config");
    ExperimentConfig c = ExperimentConfig::defaults();
    if (j.contains("workload")) c.workload = parse_workload_gen(j["workload"]);
    if (j.contains("schedulers")) {
        if (!j["schedulers"].is_array()) throw ConfigError("config.schedulers: expected a list");
        c.schedulers.clear();
        for (const auto& s : j["schedulers"]) c.schedulers.push_back(parse_scheduler(s, base_dir));
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        reject_unknown_keys(s, {"start", "stop", "step"}, "sweep");
        c.sweep.start = get_or(s, "start", c.sweep.start, "sweep");
        c.sweep.stop = get_or(s, "stop", c.sweep.stop, "sweep");
        c.sweep.step = get_or(s, "step", c.sweep.step, "sweep");
    }
    c.seeds = get_or(j, "seeds", c.seeds, "config");
    if (j.contains("weights")) {
        const json& w = j["weights"];
        reject_unknown_keys(w, {"time", "cost", "reliability"}, "weights");
        c.weights.time = get_or(w, "time", c.weights.time, "weights");
        c.weights.cost = get_or(w, "cost", c.weights.cost, "weights");
        c.weights.reliability = get_or(w, "reliability", c.weights.reliability, "weights");
    }
    if (j.contains("reward")) {
        const json& r = j["reward"];
        reject_unknown_keys(r, {"k_c", "k_u", "k_o", "k_w", "resources"}, "reward");
        c.reward.k_c = get_or(r, "k_c", c.reward.k_c, "reward");
        c.reward.k_u = get_or(r, "k_u", c.reward.k_u, "reward");
        c.reward.k_o = get_or(r, "k_o", c.reward.k_o, "reward");
        c.reward.k_w = get_or(r, "k_w", c.reward.k_w, "reward");
        c.reward.resources = parse_kinds(r, c.reward.resources, "resources", "reward");
    }
    if (j.contains("load_formula")) {
        c.load_formula = metrics::parse_load_formula(get_or<std::string>(j, "load_formula", "", "config"));
    }
    if (j.contains("load_basis")) {
        c.load_basis = metrics::parse_load_basis(get_or<std::string>(j, "load_basis", "", "config"));
    }
    if (j.contains("output_dir")) c.output_dir = get_or<std::string>(j, "output_dir", "", "config");
    if (j.contains("train")) c.train = parse_train(j["train"]);
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path.parent_path());
}

WorkloadSet cell_workload(const ExperimentConfig& config, std::size_t task_count, std::uint64_t seed) {
    return make_workload(task_count, derive_seed(seed, {task_count}), config.workload);
}

sim::SimTrace run_scheduler(const SchedulerSpec& spec, const WorkloadSet& workload, std::uint64_t seed,
                            const metrics::QosWeights& weights, const rl::LoadedPolicy* policy) {
    sched::ScheduleResult r;
    switch (spec.kind) {
        case SchedulerKind::gaaco: {
            const sched::ScheduleEvaluator ev(workload);
            r = sched::gaaco_schedule(workload, spec.gaaco, seed, sched::gaaco_objective(ev, weights, spec.gaaco));
            break;
        }
        case SchedulerKind::aco: {
            const sched::ScheduleEvaluator ev(workload);
            r = sched::aco_schedule(workload, spec.aco, seed, sched::Objective::anchored_qos(ev, weights));
            break;
        }
        case SchedulerKind::sa: {
            const sched::ScheduleEvaluator ev(workload);
            r = sched::sa_schedule(workload, spec.sa, seed, sched::Objective::anchored_qos(ev, weights));
            break;
        }
        case SchedulerKind::eft: r = sched::eft_schedule(workload); break;
        case SchedulerKind::rl:
            if (!policy) throw PreconditionError("rl scheduler '" + spec.name + "' has no loaded policy");
            return rl::run_policy(policy->params, policy->encoder, workload);
    }
    return sim::run_simulation(workload, r.assignment);
}

namespace {

struct Cell {
    std::size_t count_index = 0;
    std::size_t seed_index = 0;
    std::size_t scheduler_index = 0;
};

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
    config.validate();
    const auto counts = config.sweep.counts();

    std::map<std::size_t, rl::LoadedPolicy> policies;
    for (std::size_t i = 0; i < config.schedulers.size(); ++i) {
        const auto& s = config.schedulers[i];
        if (s.kind != SchedulerKind::rl) continue;
        rl::LoadedPolicy p = rl::load_policy(s.policy.string());
        if (p.encoder.machines < config.workload.vm_count) {
            throw ConfigError("policy " + s.policy.string() + " supports " + std::to_string(p.encoder.machines) +
                              " machines, the workload has " + std::to_string(config.workload.vm_count));
        }
        policies.emplace(i, std::move(p));
    }

    std::vector<Cell> cells;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t s = 0; s < config.seeds.size(); ++s) {
            for (std::size_t k = 0; k < config.schedulers.size(); ++k) cells.push_back({c, s, k});
        }
    }
    std::vector<ResultRow> rows(cells.size());
    std::vector<metrics::QosPoint> points(cells.size());

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t idx = next++; idx < cells.size(); idx = next++) {
            const Cell& cell = cells[idx];
            const SchedulerSpec& spec = config.schedulers[cell.scheduler_index];
            const std::size_t n = counts[cell.count_index];
            const std::uint64_t seed = config.seeds[cell.seed_index];
            ResultRow& row = rows[idx];
            row.algorithm = spec.name;
            row.task_count = n;
            row.seed = seed;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const WorkloadSet w = cell_workload(config, n, seed);
                auto it = policies.find(cell.scheduler_index);
                const sim::SimTrace trace =
                    run_scheduler(spec, w, derive_seed(seed, {n, cell.scheduler_index + 1}), config.weights,
                                  it == policies.end() ? nullptr : &it->second);
                const auto rep = metrics::evaluate(trace, w.vms, config.load_formula, config.load_basis);
                row.avg_time_cost = rep.avg_time_cost;
                row.avg_money_cost = rep.avg_money_cost;
                row.load_rate = rep.load_rate;
                row.reliability = rep.reliability;
                points[idx] = metrics::qos_point(trace, w.vms);
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
            row.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const std::size_t done = ++finished;
            if (progress) {
                std::lock_guard lock(log_mutex);
                *progress << '[' << done << '/' << cells.size() << "] " << row.algorithm << " n=" << n
                          << " seed=" << seed << (row.ok ? " ok " : " FAILED ") << row.wall_clock_s << "s"
                          << (row.ok ? "" : ": " + row.error) << '\n';
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, cells.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const std::size_t k = config.schedulers.size();
    for (std::size_t base = 0; base < cells.size(); base += k) {
        std::vector<metrics::QosPoint> pool;
        std::vector<std::size_t> members;
        for (std::size_t i = base; i < base + k; ++i) {
            if (!rows[i].ok) continue;
            pool.push_back(points[i]);
            members.push_back(i);
        }
        if (pool.empty()) continue;
        const auto scores = metrics::multi_qos(pool, config.weights);
        for (std::size_t m = 0; m < members.size(); ++m) rows[members[m]].multi_qos = scores[m];
    }
    return rows;
}

rl::TrainResult train_policy(const ExperimentConfig& config) {
    config.validate();
    const std::uint64_t seed = config.train.config.seed;
    const std::size_t n = config.train.task_count;
    const WorkloadGenConfig gen = config.workload;
    rl::WorkloadSource source = [gen, seed, n](std::size_t episode) {
        return std::make_shared<const WorkloadSet>(make_workload(n, derive_seed(seed, {2, episode}), gen));
    };
    return rl::train(source, config.env(), config.train.config);
}

}  // namespace cloudsched::experiment
