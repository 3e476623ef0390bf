#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cloudsched/sim.hpp"

namespace cloudsched::rl {

/// Layout of the fixed-size state vector and the action space.
///
/// State: per-machine occupancy over `lookahead` slots, then `ready_slots`
/// blocks of (length, input, output, wait), then the overflow count of ready
/// tasks beyond the slots and |Q_t|. Every entry is clamped to [0, 1].
/// Action index r * machines + m dispatches ready slot r to machine m; the last
/// index is the no-op.
struct EncoderConfig {
    std::size_t machines = 2;
    std::size_t ready_slots = 4;
    std::size_t lookahead = 4;
    double length_scale = 5000.0;
    double io_scale = 100.0;
    double wait_scale = 50.0;
    double queue_scale = 50.0;

    void validate() const;
    std::size_t dimension() const { return machines * lookahead + ready_slots * 4 + 2; }
    std::size_t actions() const { return ready_slots * machines + 1; }
    std::size_t noop_action() const { return ready_slots * machines; }
    bool operator==(const EncoderConfig&) const = default;
};

/// Throws ShapeError if the simulator has more machines than the encoder.
std::vector<double> encode_state(const sim::SimState& state, const EncoderConfig& config);

/// 1 for dispatches of an occupied ready slot to an idle machine, and for the
/// no-op when the clock can advance.
std::vector<char> action_mask(const sim::SimState& state, const EncoderConfig& config);

sim::Action decode_action(const sim::SimState& state, const EncoderConfig& config, std::size_t action);

/// One tanh hidden layer and a masked softmax head. theta holds W1 (hidden x
/// input), b1, W2 (actions x hidden), b2, each row-major.
struct PolicyParams {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::size_t output = 0;
    std::vector<double> theta;

    static std::size_t parameter_count(std::size_t input, std::size_t hidden, std::size_t output);
    static PolicyParams zeros(std::size_t input, std::size_t hidden, std::size_t output);
    /// Uniform in [-scale, scale], seeded.
    static PolicyParams random(std::size_t input, std::size_t hidden, std::size_t output, std::uint64_t seed,
                               double scale = 0.05);

    void validate() const;
    double mean_abs() const;
    bool operator==(const PolicyParams&) const = default;
};

std::vector<double> policy_forward(const PolicyParams& params, std::span<const double> state,
                                   std::span<const char> mask);
std::vector<double> policy_forward(const PolicyParams& params, std::span<const double> state);

double log_prob(const PolicyParams& params, std::span<const double> state, std::span<const char> mask,
                std::size_t action);

/// Analytic gradient of log pi(action | state) with respect to theta.
std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const double> state,
                                  std::span<const char> mask, std::size_t action);

/// Inverse-CDF draw that never lands on a zero-probability entry.
std::size_t sample_action(std::span<const double> probs, double u);
std::size_t greedy_action(std::span<const double> probs);

/// v_t = sum_{k >= t} gamma^(k - t) r_k; gamma in (0, 1].
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

struct Trajectory {
    std::vector<std::vector<double>> states;
    std::vector<std::vector<char>> masks;
    std::vector<std::size_t> actions;
    std::vector<double> rewards;

    std::size_t size() const { return actions.size(); }
    void validate() const;
    double total_reward() const;
};

enum class Baseline { none, mean_return };

std::string_view to_string(Baseline b);
Baseline parse_baseline(std::string_view name);

struct TrainConfig {
    double alpha = 0.01;
    double gamma = 0.99;
    std::size_t episodes = 500;
    std::size_t batch_size = 10;
    std::uint64_t seed = 1;
    Baseline baseline = Baseline::mean_return;
    std::size_t hidden = 16;
    double divergence_bound = 1e3;

    void validate() const;
};

/// theta += alpha * mean over trajectories of sum_t grad log pi(a_t | s_t) (v_t - b),
/// where b is the batch mean return when the baseline is on and 0 otherwise.
PolicyParams reinforce_update(const PolicyParams& params, std::span<const Trajectory> batch,
                              const TrainConfig& config);
PolicyParams reinforce_update(const PolicyParams& params, const Trajectory& trajectory, const TrainConfig& config);

/// Text layout: "cloudsched-policy 1", an encoder line, a dims line, then W1
/// rows, b1, W2 rows and b2, one row per line.
void save_policy(std::ostream& out, const PolicyParams& params, const EncoderConfig& encoder);
void save_policy(const std::string& path, const PolicyParams& params, const EncoderConfig& encoder);

struct LoadedPolicy {
    PolicyParams params;
    EncoderConfig encoder;
};

LoadedPolicy load_policy(std::istream& in);
LoadedPolicy load_policy(const std::string& path);

}  // namespace cloudsched::rl
