#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "cloudsched/policy.hpp"
#include "cloudsched/reward.hpp"
#include "cloudsched/rng.hpp"
#include "cloudsched/sim.hpp"

namespace cloudsched::rl {

struct EnvConfig {
    EncoderConfig encoder;
    reward::RewardConfig reward;
    std::size_t step_cap_factor = 10;  ///< episode ends after factor * tasks steps

    void validate() const;
};

/// Episodic wrapper over SimState. A no-op earns the pre-advance competition,
/// utilization and wait terms times the elapsed time, plus the overuse penalty
/// of overshoots first detected while advancing. When exactly one action is
/// valid it is applied automatically and its reward is credited to the
/// decision that led there.
class SchedulingEnv {
public:
    SchedulingEnv(std::shared_ptr<const WorkloadSet> workload, EnvConfig config);

    /// Restarts the episode; returns reward collected by forced steps before the first decision.
    double reset();
    /// Applies a decision and any forced steps after it; returns their summed reward.
    double step(std::size_t action);

    bool finished() const { return sim_.done() || truncated(); }
    bool truncated() const { return !sim_.done() && steps_ >= cap_; }
    std::size_t steps() const { return steps_; }

    std::vector<double> state() const { return encode_state(sim_, config_.encoder); }
    std::vector<char> mask() const { return action_mask(sim_, config_.encoder); }
    const sim::SimState& sim() const { return sim_; }
    const EnvConfig& config() const { return config_; }

private:
    double apply(std::size_t action);
    double skip_forced();

    std::shared_ptr<const WorkloadSet> workload_;
    EnvConfig config_;
    sim::SimState sim_;
    std::size_t steps_ = 0;
    std::size_t cap_ = 0;
};

enum class ActionMode { sample, greedy, uniform };

struct Episode {
    Trajectory trajectory;
    double total_return = 0.0;  ///< undiscounted, forced steps included
    bool truncated = false;
};

/// `params` is ignored in uniform mode.
Episode rollout(const PolicyParams& params, SchedulingEnv& env, ActionMode mode, Rng& rng);

using WorkloadSource = std::function<std::shared_ptr<const WorkloadSet>(std::size_t episode)>;

struct TrainResult {
    PolicyParams params;
    std::vector<double> curve;  ///< undiscounted return of every episode
};

/// Seeded REINFORCE: sampled rollouts, one update per batch of episodes.
/// Throws TrainingError when mean |theta| exceeds the divergence bound.
TrainResult train(const WorkloadSource& source, const EnvConfig& env, const TrainConfig& config);
TrainResult train(const WorkloadSource& source, const EnvConfig& env, const TrainConfig& config,
                  PolicyParams initial);

/// Undiscounted returns of `episodes` rollouts on source(0..episodes-1).
std::vector<double> evaluate_policy(const PolicyParams& params, const WorkloadSource& source, const EnvConfig& env,
                                    ActionMode mode, std::size_t episodes, std::uint64_t seed);

/// Greedy rollout to completion. Past the step cap the first valid dispatch is taken.
sim::SimTrace run_policy(const PolicyParams& params, const EncoderConfig& encoder, const WorkloadSet& workload,
                         std::size_t step_cap_factor = 10);

/// Two machines of different speed and Poisson arrivals.
struct ToyConfig {
    std::size_t tasks = 20;
    double mean_interarrival = 1.5;
    double slow_mips = 1000.0;
    double fast_mips = 2000.0;
};

WorkloadSet make_toy_workload(std::uint64_t seed, const ToyConfig& config = {});

/// Reward with only the wait term active.
reward::RewardConfig wait_only_reward(double k_w = 1.0);

}  // namespace cloudsched::rl
