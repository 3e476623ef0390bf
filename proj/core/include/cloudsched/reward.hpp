#pragma once

#include <array>
#include <span>
#include <vector>

#include "cloudsched/sim.hpp"
#include "cloudsched/workload.hpp"

namespace cloudsched::reward {

/// Weights of the four penalty terms. K_u is an exponent; the others scale linearly.
struct RewardConfig {
    double k_c = 1.0;
    double k_u = 2.0;
    double k_o = 5.0;
    double k_w = 1.0;
    std::vector<ResourceKind> resources{kAllResources.begin(), kAllResources.end()};

    void validate() const;
    bool considers(ResourceKind kind) const;
};

/// One workload resident on a machine: its demand series per resource kind
/// (empty span when the workload has no profile for that kind).
struct Resident {
    UserId workload = 0;
    std::array<std::span<const double>, kResourceKinds> demand{};
};

struct MachineResidents {
    std::vector<Resident> residents;
};

/// Unused capacity fraction per resource of one machine at the evaluation slot.
struct MachineSlack {
    bool in_use = false;
    std::array<double, kResourceKinds> unused{};
};

/// Sum over unordered resident pairs (i < j) of the inner product of their demand series.
double pairwise_contention(const MachineResidents& machine, ResourceKind kind);

/// -K_c * sum_d sum_m C_r(m, d). Throws ValidationError if paired series differ in length.
double competition_penalty(std::span<const MachineResidents> machines, const RewardConfig& config);

/// -sum_d sum_{m in use} |unused(m, d)|^K_u; idle machines are excluded. K_u = 0 disables the term.
double utilization_penalty(std::span<const MachineSlack> machines, const RewardConfig& config);

/// -K_o per distinct (machine, resource) pair that overshot, counted once.
double overuse_penalty(std::span<const sim::OveruseEvent> events, const RewardConfig& config);

/// -K_w * |Q_t|
double wait_penalty(std::size_t queue_length, const RewardConfig& config);

struct RewardBreakdown {
    double competition = 0.0;
    double utilization = 0.0;
    double overuse = 0.0;
    double wait = 0.0;

    double total() const { return competition + utilization + overuse + wait; }
};

/// Residents and slack of the post-step state, plus the step's new overshoots.
std::vector<MachineResidents> residents_of(const sim::StepRewardInputs& inputs);
std::vector<MachineSlack> slack_of(const sim::StepRewardInputs& inputs);

RewardBreakdown total_reward(const sim::StepRewardInputs& inputs, const RewardConfig& config);

}  // namespace cloudsched::reward
