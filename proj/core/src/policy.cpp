#include "cloudsched/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cloudsched/error.hpp"
#include "cloudsched/rng.hpp"
#include "cloudsched/trace_io.hpp"

namespace cloudsched::rl {

namespace {

double clamp01(double x) { return std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.0; }

void require_shape(const PolicyParams& p, std::span<const double> state) {
    if (state.size() != p.input) {
        throw ShapeError("state has dimension " + std::to_string(state.size()) + ", policy expects " +
                         std::to_string(p.input));
    }
    if (p.theta.size() != PolicyParams::parameter_count(p.input, p.hidden, p.output)) {
        throw ShapeError("theta size does not match policy dimensions");
    }
}

void require_mask(const PolicyParams& p, std::span<const char> mask) {
    if (mask.size() != p.output) {
        throw ShapeError("mask has " + std::to_string(mask.size()) + " entries, policy has " +
                         std::to_string(p.output) + " actions");
    }
    if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) {
        throw PreconditionError("no valid action in mask");
    }
}

struct Forward {
    std::vector<double> hidden;
    std::vector<double> probs;
};

Forward forward(const PolicyParams& p, std::span<const double> s, std::span<const char> mask) {
    const std::size_t in = p.input;
    const std::size_t hid = p.hidden;
    const double* w1 = p.theta.data();
    const double* b1 = w1 + hid * in;
    const double* w2 = b1 + hid;
    const double* b2 = w2 + p.output * hid;

    Forward f;
    f.hidden.resize(hid);
    for (std::size_t h = 0; h < hid; ++h) {
        double a = b1[h];
        for (std::size_t i = 0; i < in; ++i) a += w1[h * in + i] * s[i];
        f.hidden[h] = std::tanh(a);
    }
    std::vector<double> z(p.output, -std::numeric_limits<double>::infinity());
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.output; ++k) {
        if (!mask[k]) continue;
        double a = b2[k];
        for (std::size_t h = 0; h < hid; ++h) a += w2[k * hid + h] * f.hidden[h];
        z[k] = a;
        zmax = std::max(zmax, a);
    }
    f.probs.assign(p.output, 0.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < p.output; ++k) {
        if (!mask[k]) continue;
        f.probs[k] = std::exp(z[k] - zmax);
        sum += f.probs[k];
    }
    for (double& v : f.probs) v /= sum;
    return f;
}

}  // namespace

void EncoderConfig::validate() const {
    if (machines == 0) throw ConfigError("encoder needs at least one machine");
    if (ready_slots == 0) throw ConfigError("encoder needs at least one ready slot");
    if (lookahead < 1) throw ConfigError("lookahead must be >= 1");
    for (double s : {length_scale, io_scale, wait_scale, queue_scale}) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("encoder scales must be positive");
    }
}

std::vector<double> encode_state(const sim::SimState& state, const EncoderConfig& config) {
    config.validate();
    const auto machines = state.machines();
    if (machines.size() > config.machines) {
        throw ShapeError("simulator has " + std::to_string(machines.size()) + " machines, encoder supports " +
                         std::to_string(config.machines));
    }
    std::vector<double> out(config.dimension(), 0.0);
    const double clock = state.clock();
    const double width = state.workload().slot_width;
    const auto& tasks = state.workload().tasks;

    for (std::size_t m = 0; m < machines.size(); ++m) {
        const sim::Machine& machine = machines[m];
        double busy_end = clock;
        if (machine.running) {
            busy_end = machine.busy_until;
            for (std::size_t q : machine.queue) busy_end += machine.spec.duration(tasks[q]);
        }
        for (std::size_t j = 0; j < config.lookahead; ++j) {
            const double lo = clock + static_cast<double>(j) * width;
            out[m * config.lookahead + j] = clamp01((busy_end - lo) / width);
        }
    }

    const std::size_t base = config.machines * config.lookahead;
    const auto ready = state.ready();
    for (std::size_t r = 0; r < std::min(ready.size(), config.ready_slots); ++r) {
        const Task& t = tasks[ready[r]];
        double* slot = out.data() + base + r * 4;
        slot[0] = clamp01(t.length_mi / config.length_scale);
        slot[1] = clamp01(t.input_mb / config.io_scale);
        slot[2] = clamp01(t.output_mb / config.io_scale);
        slot[3] = clamp01((clock - state.ready_since(ready[r])) / config.wait_scale);
    }
    const std::size_t tail = base + config.ready_slots * 4;
    const std::size_t overflow = ready.size() > config.ready_slots ? ready.size() - config.ready_slots : 0;
    out[tail] = clamp01(static_cast<double>(overflow) / config.queue_scale);
    out[tail + 1] = clamp01(static_cast<double>(state.queue_length()) / config.queue_scale);
    return out;
}

std::vector<char> action_mask(const sim::SimState& state, const EncoderConfig& config) {
    std::vector<char> mask(config.actions(), 0);
    const auto machines = state.machines();
    const std::size_t slots = std::min(state.ready().size(), config.ready_slots);
    for (std::size_t r = 0; r < slots; ++r) {
        for (std::size_t m = 0; m < std::min(machines.size(), config.machines); ++m) {
            if (machines[m].idle()) mask[r * config.machines + m] = 1;
        }
    }
    if (state.can_advance()) mask[config.noop_action()] = 1;
    return mask;
}

sim::Action decode_action(const sim::SimState& state, const EncoderConfig& config, std::size_t action) {
    if (action >= config.actions()) throw ShapeError("action index " + std::to_string(action) + " out of range");
    if (action == config.noop_action()) return sim::Action::noop();
    const std::size_t r = action / config.machines;
    const std::size_t m = action % config.machines;
    if (r >= state.ready().size() || m >= state.machines().size()) {
        throw PreconditionError("action " + std::to_string(action) + " refers to an empty slot");
    }
    return sim::Action::dispatch(state.workload().tasks[state.ready()[r]].id, state.machines()[m].spec.id);
}

std::size_t PolicyParams::parameter_count(std::size_t input, std::size_t hidden, std::size_t output) {
    return hidden * input + hidden + output * hidden + output;
}

PolicyParams PolicyParams::zeros(std::size_t input, std::size_t hidden, std::size_t output) {
    if (input == 0 || hidden == 0 || output == 0) throw ShapeError("policy dimensions must be positive");
    return {input, hidden, output, std::vector<double>(parameter_count(input, hidden, output), 0.0)};
}

PolicyParams PolicyParams::random(std::size_t input, std::size_t hidden, std::size_t output, std::uint64_t seed,
                                  double scale) {
    PolicyParams p = zeros(input, hidden, output);
    Rng rng(seed);
    for (double& v : p.theta) v = (2.0 * uniform01(rng) - 1.0) * scale;
    return p;
}

void PolicyParams::validate() const {
    if (theta.size() != parameter_count(input, hidden, output)) {
        throw ShapeError("theta has " + std::to_string(theta.size()) + " entries, dimensions require " +
                         std::to_string(parameter_count(input, hidden, output)));
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i])) throw NumericError("theta entry " + std::to_string(i) + " is not finite");
    }
}

double PolicyParams::mean_abs() const {
    if (theta.empty()) return 0.0;
    double s = 0.0;
    for (double v : theta) s += std::abs(v);
    return s / static_cast<double>(theta.size());
}

std::vector<double> policy_forward(const PolicyParams& params, std::span<const double> state,
                                   std::span<const char> mask) {
    require_shape(params, state);
    require_mask(params, mask);
    return forward(params, state, mask).probs;
}

std::vector<double> policy_forward(const PolicyParams& params, std::span<const double> state) {
    const std::vector<char> all(params.output, 1);
    return policy_forward(params, state, all);
}

double log_prob(const PolicyParams& params, std::span<const double> state, std::span<const char> mask,
                std::size_t action) {
    const auto probs = policy_forward(params, state, mask);
    if (action >= probs.size() || !mask[action]) throw PreconditionError("log_prob of a masked action");
    return std::log(probs[action]);
}

std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const double> state,
                                  std::span<const char> mask, std::size_t action) {
    require_shape(params, state);
    require_mask(params, mask);
    if (action >= params.output || !mask[action]) throw PreconditionError("gradient of a masked action");
    const Forward f = forward(params, state, mask);
    const std::size_t in = params.input;
    const std::size_t hid = params.hidden;
    const std::size_t out = params.output;
    const double* w2 = params.theta.data() + hid * in + hid;

    std::vector<double> g(params.theta.size(), 0.0);
    double* gw1 = g.data();
    double* gb1 = gw1 + hid * in;
    double* gw2 = gb1 + hid;
    double* gb2 = gw2 + out * hid;

    std::vector<double> dz(out, 0.0);
    for (std::size_t k = 0; k < out; ++k) {
        if (mask[k]) dz[k] = (k == action ? 1.0 : 0.0) - f.probs[k];
    }
    std::vector<double> dh(hid, 0.0);
    for (std::size_t k = 0; k < out; ++k) {
        if (dz[k] == 0.0) continue;
        gb2[k] = dz[k];
        for (std::size_t h = 0; h < hid; ++h) {
            gw2[k * hid + h] = dz[k] * f.hidden[h];
            dh[h] += w2[k * hid + h] * dz[k];
        }
    }
    for (std::size_t h = 0; h < hid; ++h) {
        const double da = dh[h] * (1.0 - f.hidden[h] * f.hidden[h]);
        gb1[h] = da;
        for (std::size_t i = 0; i < in; ++i) gw1[h * in + i] = da * state[i];
    }
    return g;
}

std::size_t sample_action(std::span<const double> probs, double u) {
    std::size_t last = probs.size();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        last = k;
        acc += probs[k];
        if (u < acc) return k;
    }
    if (last == probs.size()) throw PreconditionError("cannot sample from an all-zero distribution");
    return last;
}

std::size_t greedy_action(std::span<const double> probs) {
    if (probs.empty()) throw PreconditionError("empty distribution");
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    std::vector<double> v(rewards.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        v[t] = acc;
    }
    return v;
}

void Trajectory::validate() const {
    if (states.size() != actions.size() || masks.size() != actions.size() || rewards.size() != actions.size()) {
        throw ValidationError("trajectory sequences differ in length");
    }
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        if (!std::isfinite(rewards[t])) throw NumericError("reward at t=" + std::to_string(t) + " is not finite");
    }
}

double Trajectory::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

std::string_view to_string(Baseline b) { return b == Baseline::none ? "none" : "mean-return"; }

Baseline parse_baseline(std::string_view name) {
    if (name == "none") return Baseline::none;
    if (name == "mean-return") return Baseline::mean_return;
    throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (hidden == 0) throw ConfigError("hidden width must be >= 1");
    if (!(divergence_bound > 0.0)) throw ConfigError("divergence_bound must be > 0");
}

PolicyParams reinforce_update(const PolicyParams& params, std::span<const Trajectory> batch,
                              const TrainConfig& config) {
    if (batch.empty()) throw PreconditionError("reinforce_update needs at least one trajectory");
    std::vector<std::vector<double>> returns;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& traj : batch) {
        traj.validate();
        if (traj.size() == 0) throw PreconditionError("reinforce_update needs a nonempty trajectory");
        returns.push_back(compute_returns(traj.rewards, config.gamma));
        for (double v : returns.back()) sum += v;
        count += traj.size();
    }
    const double baseline = config.baseline == Baseline::mean_return ? sum / static_cast<double>(count) : 0.0;

    std::vector<double> step(params.theta.size(), 0.0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Trajectory& traj = batch[b];
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const double scale = returns[b][t] - baseline;
            if (scale == 0.0) continue;
            const auto g = grad_log_prob(params, traj.states[t], traj.masks[t], traj.actions[t]);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double v = g[i] * scale;
                if (!std::isfinite(v)) throw NumericError("non-finite gradient at t=" + std::to_string(t));
                step[i] += v;
            }
        }
    }
    PolicyParams next = params;
    const double factor = config.alpha / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < step.size(); ++i) next.theta[i] += factor * step[i];
    return next;
}

PolicyParams reinforce_update(const PolicyParams& params, const Trajectory& trajectory, const TrainConfig& config) {
    return reinforce_update(params, std::span<const Trajectory>(&trajectory, 1), config);
}

namespace {

constexpr const char* kMagic = "cloudsched-policy";
constexpr int kVersion = 1;

void write_row(std::ostream& out, const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out << (i ? " " : "") << format_number(p[i]);
    out << '\n';
}

}  // namespace

void save_policy(std::ostream& out, const PolicyParams& params, const EncoderConfig& encoder) {
    params.validate();
    if (params.input != encoder.dimension() || params.output != encoder.actions()) {
        throw ShapeError("policy dimensions do not match the encoder");
    }
    out << kMagic << ' ' << kVersion << '\n';
    out << "encoder " << encoder.machines << ' ' << encoder.ready_slots << ' ' << encoder.lookahead << ' '
        << format_number(encoder.length_scale) << ' ' << format_number(encoder.io_scale) << ' '
        << format_number(encoder.wait_scale) << ' ' << format_number(encoder.queue_scale) << '\n';
    out << "dims " << params.input << ' ' << params.hidden << ' ' << params.output << '\n';
    const double* p = params.theta.data();
    for (std::size_t h = 0; h < params.hidden; ++h, p += params.input) write_row(out, p, params.input);
    write_row(out, p, params.hidden);
    p += params.hidden;
    for (std::size_t k = 0; k < params.output; ++k, p += params.hidden) write_row(out, p, params.hidden);
    write_row(out, p, params.output);
}

void save_policy(const std::string& path, const PolicyParams& params, const EncoderConfig& encoder) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write policy file " + path);
    save_policy(out, params, encoder);
    if (!out) throw IoError("failed writing policy file " + path);
}

LoadedPolicy load_policy(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw ConfigError("not a policy file");
    if (version != kVersion) throw ConfigError("unsupported policy version " + std::to_string(version));
    LoadedPolicy lp;
    std::string tag;
    EncoderConfig& e = lp.encoder;
    if (!(in >> tag) || tag != "encoder" ||
        !(in >> e.machines >> e.ready_slots >> e.lookahead >> e.length_scale >> e.io_scale >> e.wait_scale >>
          e.queue_scale)) {
        throw ConfigError("malformed encoder line in policy file");
    }
    e.validate();
    PolicyParams& p = lp.params;
    if (!(in >> tag) || tag != "dims" || !(in >> p.input >> p.hidden >> p.output)) {
        throw ConfigError("malformed dims line in policy file");
    }
    if (p.input != e.dimension() || p.output != e.actions()) {
        throw ShapeError("policy dimensions do not match its encoder line");
    }
    p.theta.resize(PolicyParams::parameter_count(p.input, p.hidden, p.output));
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        if (!(in >> p.theta[i])) throw ConfigError("policy file truncated at weight " + std::to_string(i));
    }
    p.validate();
    return lp;
}

LoadedPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open policy file " + path);
    return load_policy(in);
}

}  // namespace cloudsched::rl
