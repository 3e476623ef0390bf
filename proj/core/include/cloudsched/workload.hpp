#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cloudsched {

using TaskId = int;
using MachineId = int;
using UserId = int;

enum class ResourceKind : std::uint8_t { cpu = 0, memory = 1, bandwidth = 2 };

inline constexpr std::size_t kResourceKinds = 3;
inline constexpr std::array<ResourceKind, kResourceKinds> kAllResources{
    ResourceKind::cpu, ResourceKind::memory, ResourceKind::bandwidth};

std::string_view to_string(ResourceKind kind);
ResourceKind parse_resource_kind(std::string_view name);

inline constexpr std::size_t index_of(ResourceKind kind) { return static_cast<std::size_t>(kind); }

struct Task {
    TaskId id = 0;
    UserId user_id = 0;
    double length_mi = 1000.0;  ///< million instructions
    double input_mb = 0.0;
    double output_mb = 0.0;
    double arrival = 0.0;  ///< seconds
    std::optional<double> deadline;

    void validate() const;
    bool operator==(const Task&) const = default;
};

/// Static capacity of one virtual machine. Defaults are the evaluation fixture:
/// one CPU, 256 MB memory, 1000 MB/s bandwidth, 10 GB storage, 0.01 currency/s for
/// both instruction time and bandwidth time.
struct VmSpec {
    MachineId id = 0;
    int cpu_count = 1;
    double mips = 1000.0;
    double memory_mb = 256.0;
    double bandwidth_mbps = 1000.0;
    double storage_gb = 10.0;
    double instr_cost_rate = 0.01;
    double bw_cost_rate = 0.01;

    void validate() const;

    double execution_seconds(const Task& t) const { return t.length_mi / mips; }
    double transfer_seconds(const Task& t) const { return (t.input_mb + t.output_mb) / bandwidth_mbps; }
    /// Transfer is charged before execution on the same machine.
    double duration(const Task& t) const { return transfer_seconds(t) + execution_seconds(t); }
    double money_cost(const Task& t) const {
        return execution_seconds(t) * instr_cost_rate + transfer_seconds(t) * bw_cost_rate;
    }

    bool operator==(const VmSpec&) const = default;
};

/// Precedence edge: `from` must complete before `to` may start.
struct Edge {
    TaskId from = 0;
    TaskId to = 0;
    bool operator==(const Edge&) const = default;
};

struct DagWorkflow {
    std::vector<Task> tasks;
    std::vector<Edge> edges;
};

/// Per-user demand series for one resource kind, one entry per slot, each a
/// fraction of one machine's capacity.
struct UsageProfile {
    UserId user_id = 0;
    ResourceKind kind = ResourceKind::cpu;
    std::vector<double> series;

    void validate() const;
    bool operator==(const UsageProfile&) const = default;
};

struct DagReport {
    bool ok = true;
    std::vector<TaskId> cycle;  ///< one offending cycle, in edge order, when !ok
};

/// Checks that every edge endpoint exists and that the edge relation is acyclic.
/// Throws ValidationError for dangling endpoints or duplicate task ids.
DagReport validate_dag(const DagWorkflow& dag);

/// Flattened problem instance. Independent tasks are DAGs with no edges, so one
/// task list plus one edge list covers both cases.
struct WorkloadSet {
    std::vector<VmSpec> vms;
    std::vector<Task> tasks;
    std::vector<Edge> edges;
    std::vector<UsageProfile> profiles;
    double slot_width = 1.0;  ///< seconds per profile slot

    /// Throws ValidationError on any broken invariant (including cycles).
    void validate() const;

    /// Demand series of (user, kind), or an empty span if none is registered.
    std::span<const double> profile_series(UserId user, ResourceKind kind) const;

    /// Concatenates DAGs; task ids must already be unique across them.
    static WorkloadSet from_dags(std::vector<VmSpec> vms, std::span<const DagWorkflow> dags,
                                 std::vector<UsageProfile> profiles = {});
};

/// Position-indexed precedence lists for a task vector.
struct PrecedenceIndex {
    std::vector<std::vector<std::size_t>> predecessors;
    std::vector<std::vector<std::size_t>> successors;

    PrecedenceIndex() = default;
    PrecedenceIndex(std::span<const Task> tasks, std::span<const Edge> edges);
};

/// Topological order of task positions; ties broken by (arrival, id).
/// Throws ValidationError if the graph has a cycle.
std::vector<std::size_t> topological_order(std::span<const Task> tasks, std::span<const Edge> edges);

// ---------------------------------------------------------------------------
// Synthetic generators

struct Range {
    double min = 0.0;
    double max = 0.0;
    void validate(std::string_view name) const;
};

struct GenParams {
    Range length{1000.0, 5000.0};  ///< MI, uniform
    Range input{10.0, 100.0};      ///< MB, uniform
    Range output{10.0, 100.0};     ///< MB, uniform
    double mean_interarrival = 0.0;  ///< seconds; 0 submits the whole batch at t=0
    int users = 10;
    /// When set, deadline = arrival + slack * length / reference_mips, slack uniform.
    std::optional<Range> deadline_slack;
    double reference_mips = 1000.0;

    void validate() const;
};

std::vector<Task> generate_tasks(std::size_t n, std::uint64_t seed, const GenParams& params);

enum class ProfileShape { flat, diurnal, spike };

std::string_view to_string(ProfileShape shape);
ProfileShape parse_profile_shape(std::string_view name);

struct ProfileParams {
    ProfileShape shape = ProfileShape::diurnal;
    double level = 0.5;        ///< flat
    double base = 0.2;         ///< diurnal off-peak
    double peak = 0.8;         ///< diurnal peak, spike height
    std::size_t period = 0;    ///< diurnal; 0 means one period spanning the horizon
    std::size_t window = 0;    ///< diurnal peak width in slots; 0 means period / 4
    double noise = 0.0;        ///< uniform jitter amplitude, must be < (peak - base) / 2
    std::vector<ResourceKind> kinds{kAllResources.begin(), kAllResources.end()};

    void validate() const;
};

/// One profile per (user, kind), users numbered 0..users-1. Spike profiles place
/// each user's single spike on a distinct slot whenever users <= horizon.
std::vector<UsageProfile> generate_profiles(std::size_t users, std::size_t horizon, std::uint64_t seed,
                                            const ProfileParams& params);

/// `count` copies of `prototype` with ids 0..count-1.
std::vector<VmSpec> make_vms(std::size_t count, const VmSpec& prototype = {});

struct WorkloadGenConfig {
    std::size_t vm_count = 10;
    VmSpec vm;
    GenParams tasks;
    ProfileParams profiles;
    std::size_t horizon = 24;
    bool with_profiles = true;

    void validate() const;
};

/// Builds a complete, validated instance of `n` independent tasks.
WorkloadSet make_workload(std::size_t n, std::uint64_t seed, const WorkloadGenConfig& config);

}  // namespace cloudsched
