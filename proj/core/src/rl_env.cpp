#include "cloudsched/rl_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cloudsched/error.hpp"

namespace cloudsched::rl {

void EnvConfig::validate() const {
    encoder.validate();
    reward.validate();
    if (step_cap_factor == 0) throw ConfigError("step_cap_factor must be >= 1");
}

SchedulingEnv::SchedulingEnv(std::shared_ptr<const WorkloadSet> workload, EnvConfig config)
    : workload_(std::move(workload)), config_(std::move(config)), sim_(workload_) {
    config_.validate();
    if (workload_->vms.size() > config_.encoder.machines) {
        throw ShapeError("workload has " + std::to_string(workload_->vms.size()) + " machines, encoder supports " +
                         std::to_string(config_.encoder.machines));
    }
    cap_ = std::max<std::size_t>(1, config_.step_cap_factor * workload_->tasks.size());
}

double SchedulingEnv::reset() {
    sim_ = sim::SimState(workload_);
    steps_ = 0;
    return skip_forced();
}

double SchedulingEnv::apply(std::size_t action) {
    const sim::Action a = decode_action(sim_, config_.encoder, action);
    ++steps_;
    if (a.kind == sim::Action::Kind::dispatch) {
        return reward::overuse_penalty(sim_.step(a).new_overuse, config_.reward);
    }
    const reward::RewardBreakdown before = reward::total_reward(sim_.observe(), config_.reward);
    const sim::StepRewardInputs after = sim_.step(a);
    const double rate = before.competition + before.utilization + before.wait;
    return rate * after.elapsed + reward::overuse_penalty(after.new_overuse, config_.reward);
}

double SchedulingEnv::skip_forced() {
    double total = 0.0;
    while (!finished()) {
        const auto m = mask();
        const auto valid = std::count(m.begin(), m.end(), char{1});
        if (valid == 0) throw PreconditionError("no valid action in an unfinished episode");
        if (valid > 1) break;
        total += apply(static_cast<std::size_t>(std::find(m.begin(), m.end(), char{1}) - m.begin()));
    }
    return total;
}

double SchedulingEnv::step(std::size_t action) {
    if (finished()) throw PreconditionError("step on a finished episode");
    const auto m = mask();
    if (action >= m.size() || !m[action]) throw PreconditionError("action " + std::to_string(action) + " is masked");
    const double r = apply(action);
    return r + skip_forced();
}

Episode rollout(const PolicyParams& params, SchedulingEnv& env, ActionMode mode, Rng& rng) {
    Episode ep;
    double pending = env.reset();
    ep.total_return = pending;
    while (!env.finished()) {
        auto s = env.state();
        auto m = env.mask();
        std::size_t a = 0;
        if (mode == ActionMode::uniform) {
            std::vector<std::size_t> valid;
            for (std::size_t k = 0; k < m.size(); ++k) {
                if (m[k]) valid.push_back(k);
            }
            a = valid[uniform_index(rng, valid.size())];
        } else {
            const auto probs = policy_forward(params, s, m);
            a = mode == ActionMode::greedy ? greedy_action(probs) : sample_action(probs, uniform01(rng));
        }
        const double step_reward = env.step(a);
        ep.total_return += step_reward;
        const double r = step_reward + pending;
        pending = 0.0;
        ep.trajectory.states.push_back(std::move(s));
        ep.trajectory.masks.push_back(std::move(m));
        ep.trajectory.actions.push_back(a);
        ep.trajectory.rewards.push_back(r);
    }
    ep.truncated = env.truncated();
    return ep;
}

TrainResult train(const WorkloadSource& source, const EnvConfig& env, const TrainConfig& config) {
    config.validate();
    env.validate();
    const PolicyParams init = PolicyParams::random(env.encoder.dimension(), config.hidden, env.encoder.actions(),
                                                   derive_seed(config.seed, {0}));
    return train(source, env, config, init);
}

TrainResult train(const WorkloadSource& source, const EnvConfig& env, const TrainConfig& config,
                  PolicyParams initial) {
    config.validate();
    env.validate();
    initial.validate();
    if (initial.input != env.encoder.dimension() || initial.output != env.encoder.actions()) {
        throw ShapeError("initial policy does not match the encoder");
    }
    TrainResult result{std::move(initial), {}};
    Rng rng(derive_seed(config.seed, {1}));
    std::vector<Trajectory> batch;
    auto flush = [&] {
        if (batch.empty()) return;
        result.params = reinforce_update(result.params, batch, config);
        batch.clear();
        const double mag = result.params.mean_abs();
        if (!std::isfinite(mag) || mag > config.divergence_bound) {
            throw TrainingError("training diverged (mean |theta| = " + std::to_string(mag) +
                                "); try a smaller alpha");
        }
    };
    for (std::size_t e = 0; e < config.episodes; ++e) {
        SchedulingEnv environment(source(e), env);
        Episode ep = rollout(result.params, environment, ActionMode::sample, rng);
        result.curve.push_back(ep.total_return);
        if (ep.trajectory.size() > 0) batch.push_back(std::move(ep.trajectory));
        if ((e + 1) % config.batch_size == 0) flush();
    }
    flush();
    return result;
}

std::vector<double> evaluate_policy(const PolicyParams& params, const WorkloadSource& source, const EnvConfig& env,
                                    ActionMode mode, std::size_t episodes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(episodes);
    for (std::size_t e = 0; e < episodes; ++e) {
        SchedulingEnv environment(source(e), env);
        out.push_back(rollout(params, environment, mode, rng).total_return);
    }
    return out;
}

sim::SimTrace run_policy(const PolicyParams& params, const EncoderConfig& encoder, const WorkloadSet& workload,
                         std::size_t step_cap_factor) {
    params.validate();
    if (params.input != encoder.dimension() || params.output != encoder.actions()) {
        throw ShapeError("policy does not match the encoder");
    }
    sim::SimState state(workload);
    const std::size_t cap = std::max<std::size_t>(1, step_cap_factor * workload.tasks.size());
    std::size_t steps = 0;
    while (!state.done()) {
        const auto mask = action_mask(state, encoder);
        std::size_t a = encoder.noop_action();
        if (steps < cap) {
            a = greedy_action(policy_forward(params, encode_state(state, encoder), mask));
        } else {
            auto it = std::find(mask.begin(), mask.end(), char{1});
            if (it == mask.end()) throw PreconditionError("no valid action while tasks remain");
            a = static_cast<std::size_t>(it - mask.begin());
        }
        state.step(decode_action(state, encoder, a));
        ++steps;
    }
    return state.trace();
}

WorkloadSet make_toy_workload(std::uint64_t seed, const ToyConfig& config) {
    WorkloadSet w;
    VmSpec slow;
    slow.id = 0;
    slow.mips = config.slow_mips;
    VmSpec fast = slow;
    fast.id = 1;
    fast.mips = config.fast_mips;
    w.vms = {slow, fast};
    GenParams gen;
    gen.mean_interarrival = config.mean_interarrival;
    w.tasks = generate_tasks(config.tasks, seed, gen);
    w.validate();
    return w;
}

reward::RewardConfig wait_only_reward(double k_w) {
    reward::RewardConfig r;
    r.k_c = 0.0;
    r.k_u = 0.0;
    r.k_o = 0.0;
    r.k_w = k_w;
    return r;
}

}  // namespace cloudsched::rl
