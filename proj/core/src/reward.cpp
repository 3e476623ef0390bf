#include "cloudsched/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "cloudsched/error.hpp"

namespace cloudsched::reward {

void RewardConfig::validate() const {
    if (k_c < 0.0 || k_u < 0.0 || k_o < 0.0 || k_w < 0.0) throw ConfigError("reward weights must be >= 0");
}

bool RewardConfig::considers(ResourceKind kind) const {
    return std::find(resources.begin(), resources.end(), kind) != resources.end();
}

double pairwise_contention(const MachineResidents& machine, ResourceKind kind) {
    const std::size_t d = index_of(kind);
    double sum = 0.0;
    const auto& rs = machine.residents;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j = i + 1; j < rs.size(); ++j) {
            const auto a = rs[i].demand[d];
            const auto b = rs[j].demand[d];
            if (a.empty() || b.empty()) continue;
            if (a.size() != b.size()) {
                throw ValidationError("resident demand series differ in length (" + std::to_string(a.size()) +
                                      " vs " + std::to_string(b.size()) + ")");
            }
            for (std::size_t s = 0; s < a.size(); ++s) sum += a[s] * b[s];
        }
    }
    return sum;
}

double competition_penalty(std::span<const MachineResidents> machines, const RewardConfig& config) {
    double sum = 0.0;
    for (ResourceKind kind : config.resources) {
        for (const auto& m : machines) sum += pairwise_contention(m, kind);
    }
    return -config.k_c * sum;
}

double utilization_penalty(std::span<const MachineSlack> machines, const RewardConfig& config) {
    // |x|^0 would charge every used machine a constant; K_u = 0 switches the term off.
    if (config.k_u == 0.0) return 0.0;
    double sum = 0.0;
    for (ResourceKind kind : config.resources) {
        for (const auto& m : machines) {
            if (!m.in_use) continue;
            sum += std::pow(std::abs(m.unused[index_of(kind)]), config.k_u);
        }
    }
    return -sum;
}

double overuse_penalty(std::span<const sim::OveruseEvent> events, const RewardConfig& config) {
    std::set<std::pair<MachineId, std::size_t>> pairs;
    for (const auto& e : events) {
        if (config.considers(e.resource)) pairs.emplace(e.machine_id, index_of(e.resource));
    }
    return -config.k_o * static_cast<double>(pairs.size());
}

double wait_penalty(std::size_t queue_length, const RewardConfig& config) {
    return -config.k_w * static_cast<double>(queue_length);
}

std::vector<MachineResidents> residents_of(const sim::StepRewardInputs& in) {
    std::vector<MachineResidents> out;
    out.reserve(in.machines.size());
    for (const auto& m : in.machines) {
        MachineResidents mr;
        for (UserId u : m.residents) {
            Resident r;
            r.workload = u;
            if (in.workload) {
                for (ResourceKind k : kAllResources) r.demand[index_of(k)] = in.workload->profile_series(u, k);
            }
            mr.residents.push_back(r);
        }
        out.push_back(std::move(mr));
    }
    return out;
}

std::vector<MachineSlack> slack_of(const sim::StepRewardInputs& in) {
    std::vector<MachineSlack> out;
    out.reserve(in.machines.size());
    for (const auto& m : in.machines) {
        MachineSlack s;
        s.in_use = m.in_use;
        for (std::size_t d = 0; d < kResourceKinds; ++d) s.unused[d] = 1.0 - m.used[d];
        out.push_back(s);
    }
    return out;
}

RewardBreakdown total_reward(const sim::StepRewardInputs& inputs, const RewardConfig& config) {
    RewardBreakdown r;
    if (config.k_c != 0.0) r.competition = competition_penalty(residents_of(inputs), config);
    r.utilization = utilization_penalty(slack_of(inputs), config);
    r.overuse = overuse_penalty(inputs.new_overuse, config);
    r.wait = wait_penalty(inputs.queue_length, config);
    return r;
}

}  // namespace cloudsched::reward
