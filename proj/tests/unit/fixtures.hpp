#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cloudsched/rng.hpp"
#include "cloudsched/sim.hpp"
#include "cloudsched/workload.hpp"

namespace fixtures {

using namespace cloudsched;

inline Task make_task(TaskId id, double length, double arrival = 0.0, double in = 0.0, double out = 0.0) {
    Task t;
    t.id = id;
    t.user_id = 0;
    t.length_mi = length;
    t.arrival = arrival;
    t.input_mb = in;
    t.output_mb = out;
    return t;
}

inline VmSpec make_vm(MachineId id, double mips, double bw = 1000.0) {
    VmSpec v;
    v.id = id;
    v.mips = mips;
    v.bandwidth_mbps = bw;
    return v;
}

/// Random edge set over n nodes (ids 1..n); `acyclic` restricts edges to i<j in a shuffled order.
inline std::vector<Edge> random_edges(std::size_t n, double density, bool acyclic, Rng& rng) {
    std::vector<TaskId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<TaskId>(i + 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (acyclic && i > j) continue;
            if (uniform01(rng) < density) edges.push_back({perm[i], perm[j]});
        }
    return edges;
}

/// Kahn's algorithm over ids 1..n: true iff acyclic.
inline bool kahn_acyclic(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<int> indeg(n + 1, 0);
    std::vector<std::vector<int>> out(n + 1);
    for (const auto& e : edges) {
        ++indeg[e.to];
        out[e.from].push_back(e.to);
    }
    std::vector<int> stack;
    for (std::size_t v = 1; v <= n; ++v)
        if (indeg[v] == 0) stack.push_back(static_cast<int>(v));
    std::size_t seen = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        ++seen;
        for (int w : out[v])
            if (--indeg[w] == 0) stack.push_back(w);
    }
    return seen == n;
}

/// Random DAG workload with heterogeneous VMs and staggered arrivals.
inline WorkloadSet random_dag_workload(std::size_t n, std::size_t vms, std::uint64_t seed) {
    Rng rng(seed);
    WorkloadSet w;
    for (std::size_t m = 0; m < vms; ++m)
        w.vms.push_back(make_vm(static_cast<MachineId>(m), 500.0 + 1500.0 * uniform01(rng), 100.0 + 900.0 * uniform01(rng)));
    for (std::size_t i = 0; i < n; ++i)
        w.tasks.push_back(make_task(static_cast<TaskId>(i + 1), 100.0 + 2000.0 * uniform01(rng),
                                    std::floor(uniform01(rng) * 8.0) * 0.5, 50.0 * uniform01(rng),
                                    50.0 * uniform01(rng)));
    w.edges = random_edges(n, 0.25, true, rng);
    return w;
}

inline sim::Assignment random_assignment(const WorkloadSet& w, Rng& rng) {
    sim::Assignment a;
    for (const auto& t : w.tasks) a.machine_of[t.id] = w.vms[uniform_index(rng, w.vms.size())].id;
    return a;
}

/// Small independent-task instance with heterogeneous VMs and, optionally, deadlines.
inline WorkloadSet random_small_instance(std::size_t n, std::size_t vms, std::uint64_t seed) {
    Rng rng(seed);
    WorkloadSet w;
    for (std::size_t m = 0; m < vms; ++m) {
        VmSpec v = make_vm(static_cast<MachineId>(m), 500.0 + 1500.0 * uniform01(rng), 200.0 + 800.0 * uniform01(rng));
        v.instr_cost_rate = 0.005 + 0.02 * uniform01(rng);
        v.bw_cost_rate = 0.005 + 0.02 * uniform01(rng);
        w.vms.push_back(v);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Task t = make_task(static_cast<TaskId>(i), 500.0 + 4500.0 * uniform01(rng), uniform01(rng) * 2.0,
                           100.0 * uniform01(rng), 100.0 * uniform01(rng));
        if (uniform01(rng) < 0.5) t.deadline = t.arrival + 1.0 + 6.0 * uniform01(rng);
        w.tasks.push_back(t);
    }
    return w;
}

}  // namespace fixtures

#include "cloudsched/policy.hpp"

namespace fixtures {

/// Max over theta of |analytic - central difference| / max(|analytic|, |numeric|, 1e-6).
inline double gradient_rel_error(const rl::PolicyParams& params, const std::vector<double>& state,
                                 const std::vector<char>& mask, std::size_t action, double eps = 1e-5) {
    auto analytic = rl::grad_log_prob(params, state, mask, action);
    double worst = 0.0;
    rl::PolicyParams p = params;
    for (std::size_t k = 0; k < p.theta.size(); ++k) {
        const double orig = p.theta[k];
        p.theta[k] = orig + eps;
        const double up = rl::log_prob(p, state, mask, action);
        p.theta[k] = orig - eps;
        const double down = rl::log_prob(p, state, mask, action);
        p.theta[k] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

/// Random (theta, state, mask, action) triple with at least one valid action.
struct GradientCase {
    rl::PolicyParams params;
    std::vector<double> state;
    std::vector<char> mask;
    std::size_t action = 0;
};

inline GradientCase random_gradient_case(Rng& rng) {
    GradientCase c;
    const std::size_t input = 2 + uniform_index(rng, 8);
    const std::size_t hidden = 1 + uniform_index(rng, 8);
    const std::size_t output = 2 + uniform_index(rng, 7);
    c.params = rl::PolicyParams::random(input, hidden, output, rng(), 0.1 + 1.5 * uniform01(rng));
    c.state.resize(input);
    for (auto& x : c.state) x = uniform01(rng);
    c.mask.assign(output, 0);
    for (auto& m : c.mask) m = uniform01(rng) < 0.7;
    c.mask[uniform_index(rng, output)] = 1;
    std::vector<std::size_t> valid;
    for (std::size_t a = 0; a < output; ++a)
        if (c.mask[a]) valid.push_back(a);
    c.action = valid[uniform_index(rng, valid.size())];
    return c;
}

}  // namespace fixtures

#include <memory>

#include "cloudsched/rl_env.hpp"

namespace fixtures {

struct ToyOutcome {
    double trained = 0.0;  ///< mean undiscounted return of the policy
    double uniform = 0.0;  ///< mean return of the uniform-random policy on the same workloads
    double improvement() const { return (trained - uniform) / std::abs(uniform); }
};

/// Trains on the two-machine Poisson toy with the wait-only reward and scores
/// the result against uniform-random dispatch on shared held-out workloads.
inline ToyOutcome rl_toy_run(std::uint64_t seed, std::size_t episodes = 500, rl::ActionMode mode = rl::ActionMode::greedy,
                             std::size_t eval_episodes = 50) {
    rl::EnvConfig env;
    env.encoder.machines = 2;
    env.reward = rl::wait_only_reward();
    rl::WorkloadSource train_src = [seed](std::size_t e) {
        return std::make_shared<const WorkloadSet>(rl::make_toy_workload(derive_seed(seed, {10, e})));
    };
    rl::WorkloadSource eval_src = [](std::size_t e) {
        return std::make_shared<const WorkloadSet>(rl::make_toy_workload(derive_seed(999, {e})));
    };
    rl::TrainConfig tc;
    tc.episodes = episodes;
    tc.seed = seed;
    auto result = rl::train(train_src, env, tc);
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    ToyOutcome out;
    out.trained = mean(rl::evaluate_policy(result.params, eval_src, env, mode, eval_episodes, 7));
    out.uniform = mean(rl::evaluate_policy(result.params, eval_src, env, rl::ActionMode::uniform, eval_episodes, 7));
    return out;
}

}  // namespace fixtures
