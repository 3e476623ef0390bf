#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "cloudsched/workload.hpp"

namespace cloudsched::sim {

/// Static schedule: which machine runs each task.
struct Assignment {
    std::map<TaskId, MachineId> machine_of;

    MachineId at(TaskId task) const;
    bool operator==(const Assignment&) const = default;
};

struct TaskRecord {
    TaskId task_id = 0;
    MachineId machine_id = 0;
    UserId user_id = 0;
    double arrival = 0.0;
    double ready = 0.0;    ///< earliest dispatchable moment: max(arrival, predecessors' completion)
    double enqueue = 0.0;  ///< joined the machine queue; start of residency on the machine
    double start = 0.0;
    double completion = 0.0;
    double wait = 0.0;  ///< start - ready
    double transfer_s = 0.0;
    double exec_s = 0.0;
    std::optional<double> deadline;

    bool met_deadline() const { return !deadline || completion <= *deadline; }
    bool operator==(const TaskRecord&) const = default;
};

/// First time aggregate resident demand on (machine, resource) exceeded capacity.
struct OveruseEvent {
    MachineId machine_id = 0;
    ResourceKind resource = ResourceKind::cpu;
    double time = 0.0;

    bool operator==(const OveruseEvent&) const = default;
};

struct QueueSample {
    double time = 0.0;
    std::size_t length = 0;
    bool operator==(const QueueSample&) const = default;
};

struct MachineTimeline {
    MachineId machine_id = 0;
    double busy_time = 0.0;
    std::size_t task_count = 0;
    /// Aggregate resident demand per slot, as a fraction of capacity (may exceed 1).
    std::vector<std::array<double, kResourceKinds>> usage;

    bool operator==(const MachineTimeline&) const = default;
};

struct SimTrace {
    std::vector<TaskRecord> tasks;  ///< sorted by task id
    std::vector<MachineTimeline> machines;  ///< workload vm order
    std::vector<QueueSample> queue_length;
    std::vector<OveruseEvent> overuse;  ///< ordered by (time, machine, resource)
    double makespan = 0.0;
    double slot_width = 1.0;

    const TaskRecord& task(TaskId id) const;
    bool operator==(const SimTrace&) const = default;
};

/// Replays a static assignment. Each machine serves its FIFO queue one task at a
/// time; a task joins its machine's queue once it has arrived and every
/// predecessor has completed. Simultaneous events are ordered by (time, kind, id).
SimTrace run_simulation(const WorkloadSet& workload, const Assignment& assignment);

/// max(arrival, max CT over predecessors); throws PreconditionError if a
/// predecessor has no completion time and ValidationError for an unknown task.
double earliest_start_time(const WorkloadSet& workload, TaskId task,
                           const std::map<TaskId, double>& completion_times);
double earliest_start_time(const WorkloadSet& workload, TaskId task, const SimTrace& trace);

struct Machine {
    VmSpec spec;
    std::deque<std::size_t> queue;  ///< task positions waiting on this machine
    std::optional<std::size_t> running;
    double busy_until = 0.0;
    std::map<UserId, int> resident;  ///< resident workloads with task multiplicity

    bool in_use() const { return running.has_value() || !queue.empty(); }
    bool idle() const { return !in_use(); }
};

struct Action {
    enum class Kind { noop, dispatch };
    Kind kind = Kind::noop;
    TaskId task = 0;
    MachineId machine = 0;

    static Action noop() { return {}; }
    static Action dispatch(TaskId task, MachineId machine) { return {Kind::dispatch, task, machine}; }
};

struct MachineSnapshot {
    MachineId machine_id = 0;
    bool in_use = false;
    std::array<double, kResourceKinds> used{};  ///< resident demand in the current slot
    std::vector<UserId> residents;
};

/// What the reward terms need from one transition.
struct StepRewardInputs {
    double clock = 0.0;
    double elapsed = 0.0;
    std::size_t queue_length = 0;  ///< |Q_t|: ready tasks that have not started
    std::vector<MachineSnapshot> machines;
    std::vector<OveruseEvent> new_overuse;  ///< first overshoots detected during this step
    const WorkloadSet* workload = nullptr;
};

/// Online simulator driven one decision at a time. A dispatch places a ready
/// task on a machine at the current clock; a no-op advances the clock to the
/// next event and processes every event at that instant.
class SimState {
public:
    explicit SimState(std::shared_ptr<const WorkloadSet> workload);
    explicit SimState(const WorkloadSet& workload);

    double clock() const { return clock_; }
    const WorkloadSet& workload() const { return *workload_; }
    std::span<const Machine> machines() const { return machines_; }
    /// Positions (into workload().tasks) of ready, undispatched tasks, in ready order.
    std::span<const std::size_t> ready() const { return ready_; }
    double ready_since(std::size_t position) const { return records_[position].ready; }

    std::size_t queue_length() const;
    bool done() const { return completed_ == workload_->tasks.size(); }
    /// True when a no-op can move the clock (some future event exists).
    bool can_advance() const { return !events_.empty(); }
    bool is_ready(TaskId task) const;
    std::optional<std::size_t> position_of(TaskId task) const;
    std::optional<std::size_t> machine_index(MachineId machine) const;

    StepRewardInputs step(const Action& action);
    StepRewardInputs observe() const;

    /// Full trace; requires done().
    SimTrace trace() const;

    /// Online-detected first overshoots so far.
    std::span<const OveruseEvent> overuse() const { return overuse_; }

private:
    using Event = std::tuple<double, int, TaskId, std::size_t>;

    void process_events_at(double t);
    void start_if_idle(std::size_t machine);
    void check_overuse(double from, double to);
    double demand(std::size_t machine, ResourceKind kind, std::size_t slot) const;

    std::shared_ptr<const WorkloadSet> workload_;
    PrecedenceIndex precedence_;
    std::vector<Machine> machines_;
    std::vector<std::size_t> ready_;
    std::vector<TaskRecord> records_;
    std::vector<std::size_t> remaining_preds_;
    std::vector<char> arrived_;
    std::vector<char> dispatched_;
    std::vector<std::size_t> assigned_machine_;
    std::set<Event> events_;
    std::vector<QueueSample> samples_;
    std::vector<OveruseEvent> overuse_;
    std::set<std::pair<std::size_t, std::size_t>> overuse_fired_;
    std::map<TaskId, std::size_t> task_index_;
    double clock_ = 0.0;
    std::size_t completed_ = 0;
};

/// Functional form of SimState::step.
std::pair<SimState, StepRewardInputs> step(SimState state, const Action& action);

/// Drives SimState with the decisions a static assignment induces: every
/// ready task is dispatched to its assigned machine, then the clock advances.
SimTrace run_online(const WorkloadSet& workload, const Assignment& assignment);

namespace detail {
/// Per-slot usage timelines and post-hoc overuse detection from residency
/// intervals [enqueue, completion). `records` are indexed by task position.
SimTrace finalize_trace(const WorkloadSet& workload, std::vector<TaskRecord> records,
                        std::vector<QueueSample> samples);
}  // namespace detail

}  // namespace cloudsched::sim
