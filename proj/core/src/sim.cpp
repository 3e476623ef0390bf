#include "cloudsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cloudsched/error.hpp"

namespace cloudsched::sim {

namespace {

constexpr int kCompletionRank = 0;
constexpr int kArrivalRank = 1;

/// Smallest slot index whose start time is >= t.
std::size_t first_slot_at_or_after(double t, double width) {
    if (t <= 0.0) return 0;
    auto s = static_cast<std::size_t>(std::ceil(t / width));
    while (s > 0 && static_cast<double>(s - 1) * width >= t) --s;
    while (static_cast<double>(s) * width < t) ++s;
    return s;
}

class ProfileTable {
public:
    explicit ProfileTable(const WorkloadSet& w) {
        for (const UsageProfile& p : w.profiles) series_[{p.user_id, index_of(p.kind)}] = p.series;
    }
    double demand(UserId user, std::size_t kind, std::size_t slot) const {
        auto it = series_.find({user, kind});
        if (it == series_.end() || it->second.empty()) return 0.0;
        return it->second[slot % it->second.size()];
    }
    bool empty() const { return series_.empty(); }
    std::size_t horizon() const { return series_.empty() ? 0 : series_.begin()->second.size(); }

private:
    std::map<std::pair<UserId, std::size_t>, std::span<const double>> series_;
};

std::map<MachineId, std::size_t> index_machines(const WorkloadSet& w) {
    std::map<MachineId, std::size_t> idx;
    for (std::size_t i = 0; i < w.vms.size(); ++i) idx.emplace(w.vms[i].id, i);
    return idx;
}

TaskRecord blank_record(const Task& t) {
    TaskRecord r;
    r.task_id = t.id;
    r.user_id = t.user_id;
    r.arrival = t.arrival;
    r.deadline = t.deadline;
    return r;
}

}  // namespace

MachineId Assignment::at(TaskId task) const {
    auto it = machine_of.find(task);
    if (it == machine_of.end()) throw ValidationError("assignment is missing task " + std::to_string(task));
    return it->second;
}

const TaskRecord& SimTrace::task(TaskId id) const {
    auto it = std::lower_bound(tasks.begin(), tasks.end(), id,
                               [](const TaskRecord& r, TaskId v) { return r.task_id < v; });
    if (it == tasks.end() || it->task_id != id) throw ValidationError("trace has no task " + std::to_string(id));
    return *it;
}

namespace detail {

SimTrace finalize_trace(const WorkloadSet& w, std::vector<TaskRecord> records, std::vector<QueueSample> samples) {
    SimTrace trace;
    trace.slot_width = w.slot_width;
    trace.queue_length = std::move(samples);
    for (const TaskRecord& r : records) trace.makespan = std::max(trace.makespan, r.completion);

    const auto machine_index = index_machines(w);
    const ProfileTable profiles(w);
    const std::size_t slots = first_slot_at_or_after(trace.makespan, w.slot_width);

    std::vector<std::vector<std::vector<UserId>>> residents(w.vms.size());
    trace.machines.resize(w.vms.size());
    for (std::size_t m = 0; m < w.vms.size(); ++m) {
        trace.machines[m].machine_id = w.vms[m].id;
        residents[m].resize(profiles.empty() ? 0 : slots);
    }
    for (const TaskRecord& r : records) {
        const std::size_t m = machine_index.at(r.machine_id);
        MachineTimeline& tl = trace.machines[m];
        tl.busy_time += r.completion - r.start;
        ++tl.task_count;
        if (profiles.empty()) continue;
        for (std::size_t s = first_slot_at_or_after(r.enqueue, w.slot_width);
             s < slots && static_cast<double>(s) * w.slot_width < r.completion; ++s) {
            residents[m][s].push_back(r.user_id);
        }
    }

    std::vector<std::tuple<double, std::size_t, std::size_t>> overuse;
    for (std::size_t m = 0; m < w.vms.size(); ++m) {
        MachineTimeline& tl = trace.machines[m];
        tl.usage.assign(slots, {});
        std::array<bool, kResourceKinds> fired{};
        for (std::size_t s = 0; s < residents[m].size(); ++s) {
            auto& users = residents[m][s];
            std::sort(users.begin(), users.end());
            users.erase(std::unique(users.begin(), users.end()), users.end());
            for (std::size_t d = 0; d < kResourceKinds; ++d) {
                double used = 0.0;
                for (UserId u : users) used += profiles.demand(u, d, s);
                tl.usage[s][d] = used;
                if (used > 1.0 && !fired[d]) {
                    fired[d] = true;
                    overuse.emplace_back(static_cast<double>(s) * w.slot_width, m, d);
                }
            }
        }
    }
    std::sort(overuse.begin(), overuse.end());
    for (const auto& [t, m, d] : overuse) {
        trace.overuse.push_back({w.vms[m].id, kAllResources[d], t});
    }

    std::sort(records.begin(), records.end(),
              [](const TaskRecord& a, const TaskRecord& b) { return a.task_id < b.task_id; });
    trace.tasks = std::move(records);
    return trace;
}

}  // namespace detail

SimTrace run_simulation(const WorkloadSet& w, const Assignment& assignment) {
    w.validate();
    const auto machine_index = index_machines(w);
    const std::size_t n = w.tasks.size();
    std::vector<std::size_t> machine_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const MachineId id = assignment.at(w.tasks[i].id);
        auto it = machine_index.find(id);
        if (it == machine_index.end()) {
            throw ValidationError("task " + std::to_string(w.tasks[i].id) + " assigned to unknown machine " +
                                  std::to_string(id));
        }
        machine_of[i] = it->second;
    }

    const PrecedenceIndex prec(w.tasks, w.edges);
    std::vector<TaskRecord> rec;
    rec.reserve(n);
    for (const Task& t : w.tasks) rec.push_back(blank_record(t));
    std::vector<std::size_t> remaining(n);
    std::vector<char> arrived(n, 0);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = prec.predecessors[i].size();

    std::set<std::tuple<double, int, TaskId, std::size_t>> events;
    for (std::size_t i = 0; i < n; ++i) events.emplace(w.tasks[i].arrival, kArrivalRank, w.tasks[i].id, i);

    std::vector<std::deque<std::size_t>> queues(w.vms.size());
    std::vector<char> busy(w.vms.size(), 0);
    std::size_t waiting = 0;
    std::vector<QueueSample> samples;

    auto process = [&](double t) {
        std::vector<std::size_t> newly_ready;
        while (!events.empty() && std::get<0>(*events.begin()) <= t) {
            const auto [time, rank, id, i] = *events.begin();
            events.erase(events.begin());
            if (rank == kCompletionRank) {
                busy[machine_of[i]] = 0;
                for (std::size_t j : prec.successors[i]) {
                    if (--remaining[j] == 0 && arrived[j]) newly_ready.push_back(j);
                }
            } else {
                arrived[i] = 1;
                if (remaining[i] == 0) newly_ready.push_back(i);
            }
        }
        std::sort(newly_ready.begin(), newly_ready.end(),
                  [&](std::size_t a, std::size_t b) { return w.tasks[a].id < w.tasks[b].id; });
        for (std::size_t i : newly_ready) {
            rec[i].ready = t;
            rec[i].enqueue = t;
            rec[i].machine_id = w.vms[machine_of[i]].id;
            queues[machine_of[i]].push_back(i);
            ++waiting;
        }
        for (std::size_t m = 0; m < queues.size(); ++m) {
            if (busy[m] || queues[m].empty()) continue;
            const std::size_t i = queues[m].front();
            queues[m].pop_front();
            --waiting;
            busy[m] = 1;
            const VmSpec& vm = w.vms[m];
            rec[i].start = t;
            rec[i].wait = t - rec[i].ready;
            rec[i].transfer_s = vm.transfer_seconds(w.tasks[i]);
            rec[i].exec_s = vm.execution_seconds(w.tasks[i]);
            rec[i].completion = t + vm.duration(w.tasks[i]);
            events.emplace(rec[i].completion, kCompletionRank, w.tasks[i].id, i);
        }
    };

    double clock = 0.0;
    process(clock);
    for (;;) {
        samples.push_back({clock, waiting});
        if (events.empty()) break;
        clock = std::get<0>(*events.begin());
        process(clock);
    }
    return detail::finalize_trace(w, std::move(rec), std::move(samples));
}

double earliest_start_time(const WorkloadSet& w, TaskId task, const std::map<TaskId, double>& completion_times) {
    auto it = std::find_if(w.tasks.begin(), w.tasks.end(), [task](const Task& t) { return t.id == task; });
    if (it == w.tasks.end()) throw ValidationError("unknown task id " + std::to_string(task));
    double est = it->arrival;
    for (const Edge& e : w.edges) {
        if (e.to != task) continue;
        auto ct = completion_times.find(e.from);
        if (ct == completion_times.end()) {
            throw PreconditionError("predecessor " + std::to_string(e.from) + " of task " + std::to_string(task) +
                                    " has no completion time");
        }
        est = std::max(est, ct->second);
    }
    return est;
}

double earliest_start_time(const WorkloadSet& w, TaskId task, const SimTrace& trace) {
    std::map<TaskId, double> ct;
    for (const TaskRecord& r : trace.tasks) ct.emplace(r.task_id, r.completion);
    return earliest_start_time(w, task, ct);
}

// ---------------------------------------------------------------------------
// SimState

SimState::SimState(const WorkloadSet& workload) : SimState(std::make_shared<const WorkloadSet>(workload)) {}

SimState::SimState(std::shared_ptr<const WorkloadSet> workload) : workload_(std::move(workload)) {
    if (!workload_) throw PreconditionError("null workload");
    const WorkloadSet& w = *workload_;
    w.validate();
    precedence_ = PrecedenceIndex(w.tasks, w.edges);
    const std::size_t n = w.tasks.size();
    for (const VmSpec& vm : w.vms) machines_.push_back(Machine{vm, {}, std::nullopt, 0.0, {}});
    records_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        records_.push_back(blank_record(w.tasks[i]));
        remaining_preds_.push_back(precedence_.predecessors[i].size());
        task_index_.emplace(w.tasks[i].id, i);
        events_.emplace(w.tasks[i].arrival, kArrivalRank, w.tasks[i].id, i);
    }
    arrived_.assign(n, 0);
    dispatched_.assign(n, 0);
    assigned_machine_.assign(n, 0);
    process_events_at(0.0);
    if (done()) samples_.push_back({clock_, queue_length()});
}

std::size_t SimState::queue_length() const {
    std::size_t q = ready_.size();
    for (const Machine& m : machines_) q += m.queue.size();
    return q;
}

std::optional<std::size_t> SimState::position_of(TaskId task) const {
    auto it = task_index_.find(task);
    if (it == task_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> SimState::machine_index(MachineId machine) const {
    for (std::size_t m = 0; m < machines_.size(); ++m) {
        if (machines_[m].spec.id == machine) return m;
    }
    return std::nullopt;
}

bool SimState::is_ready(TaskId task) const {
    auto pos = position_of(task);
    return pos && std::find(ready_.begin(), ready_.end(), *pos) != ready_.end();
}

void SimState::start_if_idle(std::size_t m) {
    Machine& machine = machines_[m];
    if (machine.running || machine.queue.empty()) return;
    const std::size_t i = machine.queue.front();
    machine.queue.pop_front();
    const Task& t = workload_->tasks[i];
    TaskRecord& r = records_[i];
    r.start = clock_;
    r.wait = clock_ - r.ready;
    r.transfer_s = machine.spec.transfer_seconds(t);
    r.exec_s = machine.spec.execution_seconds(t);
    r.completion = clock_ + machine.spec.duration(t);
    machine.running = i;
    machine.busy_until = r.completion;
    events_.emplace(r.completion, kCompletionRank, t.id, i);
}

void SimState::process_events_at(double t) {
    std::vector<std::size_t> newly_ready;
    while (!events_.empty() && std::get<0>(*events_.begin()) <= t) {
        const auto [time, rank, id, i] = *events_.begin();
        events_.erase(events_.begin());
        if (rank == kCompletionRank) {
            Machine& m = machines_[assigned_machine_[i]];
            m.running.reset();
            auto res = m.resident.find(workload_->tasks[i].user_id);
            if (--res->second == 0) m.resident.erase(res);
            ++completed_;
            for (std::size_t j : precedence_.successors[i]) {
                if (--remaining_preds_[j] == 0 && arrived_[j]) newly_ready.push_back(j);
            }
        } else {
            arrived_[i] = 1;
            if (remaining_preds_[i] == 0) newly_ready.push_back(i);
        }
    }
    std::sort(newly_ready.begin(), newly_ready.end(),
              [&](std::size_t a, std::size_t b) { return workload_->tasks[a].id < workload_->tasks[b].id; });
    for (std::size_t i : newly_ready) {
        records_[i].ready = t;
        ready_.push_back(i);
    }
    for (std::size_t m = 0; m < machines_.size(); ++m) start_if_idle(m);
}

double SimState::demand(std::size_t m, ResourceKind kind, std::size_t slot) const {
    double used = 0.0;
    for (const auto& [user, count] : machines_[m].resident) {
        auto series = workload_->profile_series(user, kind);
        if (!series.empty()) used += series[slot % series.size()];
    }
    return used;
}

void SimState::check_overuse(double from, double to) {
    if (workload_->profiles.empty()) return;
    const double width = workload_->slot_width;
    const std::size_t horizon = workload_->profiles.front().series.size();
    const std::size_t first = first_slot_at_or_after(from, width);
    // Residency is constant over [from, to), so the demand pattern repeats after one horizon.
    for (std::size_t s = first; s < first + horizon && static_cast<double>(s) * width < to; ++s) {
        for (std::size_t m = 0; m < machines_.size(); ++m) {
            if (machines_[m].resident.empty()) continue;
            for (std::size_t d = 0; d < kResourceKinds; ++d) {
                if (overuse_fired_.contains({m, d})) continue;
                if (demand(m, kAllResources[d], s) > 1.0) {
                    overuse_fired_.insert({m, d});
                    overuse_.push_back({machines_[m].spec.id, kAllResources[d], static_cast<double>(s) * width});
                }
            }
        }
    }
}

StepRewardInputs SimState::observe() const {
    StepRewardInputs in;
    in.clock = clock_;
    in.queue_length = queue_length();
    in.workload = workload_.get();
    const auto slot = static_cast<std::size_t>(std::floor(clock_ / workload_->slot_width));
    for (std::size_t m = 0; m < machines_.size(); ++m) {
        MachineSnapshot snap;
        snap.machine_id = machines_[m].spec.id;
        snap.in_use = machines_[m].in_use();
        for (const auto& [user, count] : machines_[m].resident) snap.residents.push_back(user);
        for (std::size_t d = 0; d < kResourceKinds; ++d) snap.used[d] = demand(m, kAllResources[d], slot);
        in.machines.push_back(std::move(snap));
    }
    return in;
}

StepRewardInputs SimState::step(const Action& action) {
    if (action.kind == Action::Kind::dispatch) {
        auto pos = position_of(action.task);
        if (!pos) throw PreconditionError("dispatch of unknown task " + std::to_string(action.task));
        auto it = std::find(ready_.begin(), ready_.end(), *pos);
        if (it == ready_.end()) throw PreconditionError("task " + std::to_string(action.task) + " is not ready");
        auto m = machine_index(action.machine);
        if (!m) throw PreconditionError("dispatch to unknown machine " + std::to_string(action.machine));
        ready_.erase(it);
        TaskRecord& r = records_[*pos];
        r.machine_id = action.machine;
        r.enqueue = clock_;
        dispatched_[*pos] = 1;
        assigned_machine_[*pos] = *m;
        Machine& machine = machines_[*m];
        ++machine.resident[workload_->tasks[*pos].user_id];
        machine.queue.push_back(*pos);
        start_if_idle(*m);
        return observe();
    }

    if (done()) return observe();
    if (events_.empty()) throw PreconditionError("no future event; a ready task must be dispatched");
    const double from = clock_;
    const double to = std::get<0>(*events_.begin());
    const std::size_t before = overuse_.size();
    check_overuse(from, to);
    samples_.push_back({from, queue_length()});
    clock_ = to;
    process_events_at(to);
    if (done()) samples_.push_back({clock_, queue_length()});

    StepRewardInputs in = observe();
    in.elapsed = to - from;
    in.new_overuse.assign(overuse_.begin() + static_cast<std::ptrdiff_t>(before), overuse_.end());
    return in;
}

SimTrace SimState::trace() const {
    if (!done()) throw PreconditionError("trace requested before every task completed");
    return detail::finalize_trace(*workload_, records_, samples_);
}

std::pair<SimState, StepRewardInputs> step(SimState state, const Action& action) {
    StepRewardInputs in = state.step(action);
    return {std::move(state), std::move(in)};
}

SimTrace run_online(const WorkloadSet& workload, const Assignment& assignment) {
    SimState state(workload);
    while (!state.done()) {
        std::vector<TaskId> ready;
        for (std::size_t pos : state.ready()) ready.push_back(workload.tasks[pos].id);
        for (TaskId id : ready) state.step(Action::dispatch(id, assignment.at(id)));
        state.step(Action::noop());
    }
    return state.trace();
}

}  // namespace cloudsched::sim
