#include "cloudsched/workload_io.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace cloudsched {

namespace {

using detail::get_or;
using detail::get_required;
using detail::json;
using detail::reject_unknown_keys;

VmSpec parse_vm(const json& j) {
    reject_unknown_keys(j,
                        {"id", "cpu_count", "mips", "memory_mb", "bandwidth_mbps", "storage_gb", "instr_cost_rate",
                         "bw_cost_rate"},
                        "vm");
    VmSpec d;
    VmSpec vm;
    vm.id = get_required<MachineId>(j, "id", "vm");
    vm.cpu_count = get_or(j, "cpu_count", d.cpu_count, "vm");
    vm.mips = get_or(j, "mips", d.mips, "vm");
    vm.memory_mb = get_or(j, "memory_mb", d.memory_mb, "vm");
    vm.bandwidth_mbps = get_or(j, "bandwidth_mbps", d.bandwidth_mbps, "vm");
    vm.storage_gb = get_or(j, "storage_gb", d.storage_gb, "vm");
    vm.instr_cost_rate = get_or(j, "instr_cost_rate", d.instr_cost_rate, "vm");
    vm.bw_cost_rate = get_or(j, "bw_cost_rate", d.bw_cost_rate, "vm");
    return vm;
}

Task parse_task(const json& j) {
    reject_unknown_keys(j, {"id", "user_id", "length_mi", "input_mb", "output_mb", "arrival", "deadline"}, "task");
    Task t;
    t.id = get_required<TaskId>(j, "id", "task");
    t.user_id = get_or<UserId>(j, "user_id", 0, "task");
    t.length_mi = get_required<double>(j, "length_mi", "task");
    t.input_mb = get_or(j, "input_mb", 0.0, "task");
    t.output_mb = get_or(j, "output_mb", 0.0, "task");
    t.arrival = get_or(j, "arrival", 0.0, "task");
    if (j.contains("deadline") && !j["deadline"].is_null()) t.deadline = get_required<double>(j, "deadline", "task");
    return t;
}

std::vector<Task> parse_tasks(const json& j) {
    if (!j.is_array()) throw ConfigError("tasks: expected an array");
    std::vector<Task> out;
    for (const json& t : j) out.push_back(parse_task(t));
    return out;
}

Edge parse_edge(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("edge: expected [predecessor, successor]");
    try {
        return Edge{j[0].get<TaskId>(), j[1].get<TaskId>()};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("edge: ") + e.what());
    }
}

UsageProfile parse_profile(const json& j) {
    reject_unknown_keys(j, {"user_id", "kind", "series"}, "profile");
    UsageProfile p;
    p.user_id = get_required<UserId>(j, "user_id", "profile");
    p.kind = parse_resource_kind(get_required<std::string>(j, "kind", "profile"));
    p.series = get_required<std::vector<double>>(j, "series", "profile");
    return p;
}

json task_json(const Task& t) {
    json j{{"id", t.id},           {"user_id", t.user_id},     {"length_mi", t.length_mi},
           {"input_mb", t.input_mb}, {"output_mb", t.output_mb}, {"arrival", t.arrival}};
    if (t.deadline) j["deadline"] = *t.deadline;
    return j;
}

}  // namespace

WorkloadSet parse_workload(std::string_view json_text) {
    const json doc = detail::parse_json(json_text, "workload");
    reject_unknown_keys(doc, {"vms", "tasks", "dags", "profiles"}, "workload");
    if (doc.contains("tasks") && doc.contains("dags")) {
        throw ConfigError("workload: give either 'tasks' or 'dags', not both");
    }
    WorkloadSet w;
    if (auto it = doc.find("vms"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("vms: expected an array");
        for (const json& v : *it) w.vms.push_back(parse_vm(v));
    }
    if (auto it = doc.find("tasks"); it != doc.end()) w.tasks = parse_tasks(*it);
    if (auto it = doc.find("dags"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("dags: expected an array");
        for (const json& d : *it) {
            reject_unknown_keys(d, {"tasks", "edges"}, "dag");
            auto tasks = parse_tasks(d.value("tasks", json::array()));
            w.tasks.insert(w.tasks.end(), tasks.begin(), tasks.end());
            if (auto e = d.find("edges"); e != d.end()) {
                if (!e->is_array()) throw ConfigError("dag.edges: expected an array");
                for (const json& edge : *e) w.edges.push_back(parse_edge(edge));
            }
        }
    }
    if (auto it = doc.find("profiles"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("profiles: expected an array");
        for (const json& p : *it) w.profiles.push_back(parse_profile(p));
    }
    w.validate();
    return w;
}

WorkloadSet load_workload(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open workload file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_workload(buf.str());
}

std::string dump_workload(const WorkloadSet& w) {
    json doc;
    doc["vms"] = json::array();
    for (const VmSpec& vm : w.vms) {
        doc["vms"].push_back({{"id", vm.id},
                              {"cpu_count", vm.cpu_count},
                              {"mips", vm.mips},
                              {"memory_mb", vm.memory_mb},
                              {"bandwidth_mbps", vm.bandwidth_mbps},
                              {"storage_gb", vm.storage_gb},
                              {"instr_cost_rate", vm.instr_cost_rate},
                              {"bw_cost_rate", vm.bw_cost_rate}});
    }
    json tasks = json::array();
    for (const Task& t : w.tasks) tasks.push_back(task_json(t));
    if (w.edges.empty()) {
        doc["tasks"] = std::move(tasks);
    } else {
        json edges = json::array();
        for (const Edge& e : w.edges) edges.push_back({e.from, e.to});
        doc["dags"] = json::array({json{{"tasks", std::move(tasks)}, {"edges", std::move(edges)}}});
    }
    doc["profiles"] = json::array();
    for (const UsageProfile& p : w.profiles) {
        doc["profiles"].push_back({{"user_id", p.user_id}, {"kind", std::string(to_string(p.kind))}, {"series", p.series}});
    }
    return doc.dump(2);
}

}  // namespace cloudsched
