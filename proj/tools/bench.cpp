#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cloudsched/clustering.hpp"
#include "cloudsched/error.hpp"
#include "cloudsched/experiment.hpp"
#include "cloudsched/report.hpp"
#include "cloudsched/trace_io.hpp"
#include "cloudsched/workload_io.hpp"

namespace fs = std::filesystem;
using namespace cloudsched;

namespace {

experiment::ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? experiment::ExperimentConfig::defaults() : experiment::load_experiment_config(path);
}

void print_summary(std::ostream& out, const experiment::Summary& s) {
    out << std::left << std::setw(10) << "algorithm" << std::setw(7) << "tasks";
    for (std::size_t m = 0; m < 4; ++m) out << std::setw(18) << experiment::kMetricNames[m];
    out << '\n';
    std::string last;
    for (const auto& c : s.cells) {
        if (c.metric != 0) continue;
        out << std::setw(10) << c.algorithm << std::setw(7) << c.task_count;
        for (std::size_t m = 0; m < 4; ++m) {
            const auto* cell = s.find(c.algorithm, c.task_count, m);
            out << std::setw(18) << std::setprecision(6) << cell->mean;
        }
        out << '\n';
    }
}

int run_cmd(const std::string& config_path, std::size_t jobs, const std::string& out_dir,
            const std::optional<std::string>& formula) {
    auto cfg = config_or_default(config_path);
    if (formula) cfg.load_formula = metrics::parse_load_formula(*formula);
    const fs::path dir = out_dir.empty() ? cfg.output_dir : fs::path(out_dir);
    const auto rows = experiment::run_experiment(cfg, jobs, &std::cerr);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.ok ? 0 : 1;
    const auto summary = experiment::summarize(rows);
    experiment::emit_report(rows, summary, dir);
    std::ofstream timings(dir / "timings.csv");
    if (!timings) throw IoError("cannot write " + (dir / "timings.csv").string());
    experiment::write_timings_csv(timings, rows);
    std::cout << rows.size() << " rows (" << failed << " failed) written to " << dir.string() << '\n';
    return 0;
}

int train_cmd(const std::string& config_path, const std::string& out) {
    const auto cfg = config_or_default(config_path);
    const auto result = experiment::train_policy(cfg);
    rl::save_policy(out, result.params, cfg.encoder());
    const auto& c = result.curve;
    if (!c.empty()) {
        const std::size_t w = std::max<std::size_t>(1, c.size() / 10);
        double first = 0.0;
        double last = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            first += c[i];
            last += c[c.size() - 1 - i];
        }
        std::cout << "episodes " << c.size() << ", mean return first " << w << ": " << format_number(first / w)
                  << ", last " << w << ": " << format_number(last / w) << '\n';
    }
    std::cout << "policy written to " << out << '\n';
    return 0;
}

int summarize_cmd(const std::string& in_dir) {
    const auto rows = experiment::read_results_csv(fs::path(in_dir) / "results.csv");
    const auto summary = experiment::summarize(rows);
    experiment::emit_report(rows, summary, in_dir);
    print_summary(std::cout, summary);
    return 0;
}

int simulate_cmd(const std::string& workload_path, const std::string& scheduler, const std::string& config_path,
                 const std::string& policy, std::uint64_t seed, const std::string& out_dir) {
    const auto cfg = config_or_default(config_path);
    const WorkloadSet w = load_workload(workload_path);
    experiment::SchedulerSpec spec;
    bool found = false;
    for (const auto& s : cfg.schedulers) {
        if (s.name == scheduler) {
            spec = s;
            found = true;
        }
    }
    if (!found) {
        spec.kind = experiment::parse_scheduler_kind(scheduler);
        spec.name = scheduler;
    }
    if (!policy.empty()) spec.policy = policy;
    std::optional<rl::LoadedPolicy> loaded;
    if (spec.kind == experiment::SchedulerKind::rl) {
        if (spec.policy.empty()) throw ConfigError("rl simulation needs --policy");
        loaded = rl::load_policy(spec.policy.string());
    }
    const auto trace = experiment::run_scheduler(spec, w, seed, cfg.weights, loaded ? &*loaded : nullptr);
    write_trace_files(out_dir, trace);
    const auto rep = metrics::evaluate(trace, w.vms, cfg.load_formula, cfg.load_basis);
    std::cout << "avg_time_cost " << format_number(rep.avg_time_cost) << "\navg_money_cost "
              << format_number(rep.avg_money_cost) << "\nload_rate " << format_number(rep.load_rate)
              << "\nreliability " << format_number(rep.reliability) << "\nmakespan " << format_number(trace.makespan)
              << '\n';
    return 0;
}

int cluster_cmd(const std::string& workload_path, std::size_t k, const std::string& distance,
                const std::string& kind, std::uint64_t seed, const std::string& out_dir) {
    const WorkloadSet w = load_workload(workload_path);
    const auto profiles = cluster::profiles_of_kind(w.profiles, parse_resource_kind(kind));
    if (profiles.empty()) throw ConfigError("workload has no " + kind + " profiles");
    const auto d = cluster::parse_cluster_distance(distance);
    const auto model = cluster::kmeans_cluster(profiles, k, d, seed);
    const auto elbow = cluster::inertia_elbow(profiles, std::min<std::size_t>(profiles.size(), 10), d, seed);
    fs::create_directories(out_dir);
    std::ofstream a(fs::path(out_dir) / "clusters.csv");
    std::ofstream c(fs::path(out_dir) / "centroids.csv");
    std::ofstream e(fs::path(out_dir) / "elbow.csv");
    if (!a || !c || !e) throw IoError("cannot write into " + out_dir);
    cluster::write_cluster_csv(a, model);
    cluster::write_centroid_csv(c, model);
    e << "k,inertia\n";
    for (std::size_t i = 0; i < elbow.size(); ++i) e << i + 1 << ',' << format_number(elbow[i]) << '\n';
    std::cout << "k=" << k << " inertia " << format_number(model.inertia) << " after " << model.iterations
              << " iterations\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cloudsched experiment driver"};
    app.require_subcommand(0, 1);
    bool show_params = false;
    std::optional<std::string> formula;
    app.add_flag("--show-params", show_params, "Print the GAACO parameter table and exit");
    app.add_option("--load-formula", formula, "Load-rate formula: imbalance or literal")
        ->check(CLI::IsMember({"imbalance", "literal"}));

    std::string config_path;
    std::size_t jobs = 1;
    std::string out;
    auto* run = app.add_subcommand("run", "Sweep schedulers over task counts and seeds");
    run->add_option("--config", config_path, "Experiment config (JSON)");
    run->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);
    run->add_option("--out", out, "Output directory (overrides output_dir)");
    run->add_option("--load-formula", formula, "Load-rate formula: imbalance or literal")
        ->check(CLI::IsMember({"imbalance", "literal"}));

    auto* train = app.add_subcommand("train", "Train the RL dispatch policy");
    train->add_option("--config", config_path, "Experiment config (JSON)");
    train->add_option("--out", out, "Policy file to write")->required();

    std::string in_dir;
    auto* summarize = app.add_subcommand("summarize", "Rebuild summary, deltas and plot script from results.csv");
    summarize->add_option("--in", in_dir, "Directory holding results.csv")->required();

    std::string workload_path;
    std::string scheduler = "gaaco";
    std::string policy;
    std::uint64_t seed = 1;
    auto* simulate = app.add_subcommand("simulate", "Schedule one workload file and write its trace");
    simulate->add_option("--workload", workload_path, "Workload document (JSON)")->required();
    simulate->add_option("--scheduler", scheduler, "gaaco, aco, sa, eft, rl or a configured name");
    simulate->add_option("--config", config_path, "Experiment config supplying parameters");
    simulate->add_option("--policy", policy, "Policy file for rl");
    simulate->add_option("--seed", seed, "Scheduler seed");
    simulate->add_option("--out", out, "Output directory for trace.csv and usage.csv")->required();

    std::size_t k = 3;
    std::string distance = "dtw";
    std::string kind = "cpu";
    auto* clusterc = app.add_subcommand("cluster", "Cluster per-user usage profiles of a workload");
    clusterc->add_option("--workload", workload_path, "Workload document (JSON)")->required();
    clusterc->add_option("--k", k, "Cluster count")->check(CLI::PositiveNumber);
    clusterc->add_option("--distance", distance, "dtw or euclidean-features");
    clusterc->add_option("--resource", kind, "cpu, memory or bandwidth");
    clusterc->add_option("--seed", seed, "Initialization seed");
    clusterc->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (show_params) {
            sched::print_params(std::cout, sched::GaacoParams{});
            return 0;
        }
        if (*run) return run_cmd(config_path, jobs, out, formula);
        if (*train) return train_cmd(config_path, out);
        if (*summarize) return summarize_cmd(in_dir);
        if (*simulate) return simulate_cmd(workload_path, scheduler, config_path, policy, seed, out);
        if (*clusterc) return cluster_cmd(workload_path, k, distance, kind, seed, out);
        std::cout << app.help();
        return 0;
    } catch (const cloudsched::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
