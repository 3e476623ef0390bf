#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cloudsched/error.hpp"
#include "cloudsched/experiment.hpp"
#include "cloudsched/report.hpp"

using namespace cloudsched;
using namespace cloudsched::experiment;

namespace {

ExperimentConfig small_config() {
    return parse_experiment_config(R"({
        "workload": {"vm_count": 3},
        "schedulers": [
            {"type": "gaaco", "params": {"evolution_num": 5}},
            {"type": "aco", "params": {"iterations": 5}},
            {"type": "sa", "params": {"steps_per_temp": 5}},
            "eft"
        ],
        "sweep": {"start": 10, "stop": 20, "step": 10},
        "seeds": [1, 2]
    })");
}

ResultRow row(std::string alg, std::size_t n, std::uint64_t seed, double time) {
    ResultRow r;
    r.algorithm = std::move(alg);
    r.task_count = n;
    r.seed = seed;
    r.avg_time_cost = time;
    r.avg_money_cost = 1.0;
    r.load_rate = 0.5;
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("default configuration is the evaluation sweep") {
    auto c = ExperimentConfig::defaults();
    CHECK(c.sweep.counts() == std::vector<std::size_t>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    REQUIRE(c.schedulers.size() == 3);
    CHECK(c.schedulers[0].kind == SchedulerKind::gaaco);
    CHECK(c.schedulers[1].kind == SchedulerKind::aco);
    CHECK(c.schedulers[2].kind == SchedulerKind::sa);
    CHECK(c.workload.vm_count == 10);
    CHECK(c.sweep.counts().size() * c.seeds.size() * c.schedulers.size() == 150);
}

TEST_CASE("config validation errors") {
    CHECK_THROWS_AS(parse_experiment_config(R"({"sweep": {"start": 50, "stop": 10}})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"seeds": []})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"schedulers": []})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"schedulers": ["aco", "aco"]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"schedulers": [{"type": "gaaco", "params": {"pc": 2}}]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"schedulers": [{"type": "gaaco", "params": {"speed": 2}}]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"schedulers": ["rl"]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"weights": {"time": 0.9}})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"seeds": [1, 1]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("config parsing picks up parameters") {
    auto c = parse_experiment_config(R"({
        "schedulers": [{"type": "sa", "name": "sa-reassign", "params": {"neighborhood": "reassign"}},
                       {"type": "rl", "policy": "theta.txt"}],
        "load_formula": "literal",
        "reward": {"k_w": 3, "resources": ["cpu"]}
    })", "/base");
    CHECK(c.schedulers[0].name == "sa-reassign");
    CHECK(c.schedulers[0].sa.neighborhood == sched::SaNeighborhood::reassign);
    CHECK(c.schedulers[1].policy == std::filesystem::path("/base/theta.txt"));
    CHECK(c.load_formula == metrics::LoadFormula::literal);
    CHECK(c.reward.k_w == 3.0);
    CHECK(c.reward.resources == std::vector<ResourceKind>{ResourceKind::cpu});
}

TEST_CASE("run_experiment cardinality, order and determinism") {
    auto c = small_config();
    c.schedulers.resize(1);
    c.sweep = {10, 10, 10};
    c.seeds = {3};
    CHECK(run_experiment(c).size() == 1);

    auto full = small_config();
    auto rows = run_experiment(full, 2);
    REQUIRE(rows.size() == 2 * 2 * 4);
    std::size_t i = 0;
    for (std::size_t n : {10, 20})
        for (std::uint64_t seed : {1, 2})
            for (const char* alg : {"gaaco", "aco", "sa", "eft"}) {
                CHECK(rows[i].task_count == n);
                CHECK(rows[i].seed == seed);
                CHECK(rows[i].algorithm == alg);
                CHECK(rows[i].ok);
                ++i;
            }
    auto again = run_experiment(full, 1);
    std::ostringstream a, b;
    write_results_csv(a, rows);
    write_results_csv(b, again);
    CHECK(a.str() == b.str());
}

TEST_CASE("cells are isolated from other schedulers' settings") {
    auto c = small_config();
    auto base = run_experiment(c);
    c.schedulers[0].gaaco.evolution_num = 2;
    auto changed = run_experiment(c);
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i].algorithm == "gaaco") continue;
        CHECK(base[i].avg_time_cost == changed[i].avg_time_cost);
        CHECK(base[i].avg_money_cost == changed[i].avg_money_cost);
        CHECK(base[i].load_rate == changed[i].load_rate);
    }
}

TEST_CASE("multi_qos is pool-normalized per cell") {
    auto rows = run_experiment(small_config());
    for (std::size_t base = 0; base < rows.size(); base += 4) {
        double lo = 1e300;
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(rows[base + k].multi_qos >= 0.0);
            CHECK(rows[base + k].multi_qos <= 1.0);
            lo = std::min(lo, rows[base + k].multi_qos);
        }
        CHECK(lo <= 0.8);
    }
}

TEST_CASE("results csv round trip with failed rows") {
    std::vector<ResultRow> rows{row("gaaco", 10, 1, 1.25), row("aco", 10, 1, 2.5)};
    rows[1].ok = false;
    rows[1].error = "boom";
    std::stringstream ss;
    write_results_csv(ss, rows);
    auto text = ss.str();
    CHECK(text.rfind(std::string(kResultsHeader) + "\n", 0) == 0);
    auto back = read_results_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].avg_time_cost == 1.25);
    CHECK_FALSE(back[1].ok);
    CHECK(back[1].error == "boom");

    std::ostringstream t;
    write_timings_csv(t, rows);
    CHECK(t.str().rfind(std::string(kTimingsHeader) + "\n", 0) == 0);
}

TEST_CASE("summarize examples") {
    std::vector<ResultRow> same{row("a", 10, 1, 3.0), row("b", 10, 1, 3.0)};
    auto s = summarize(same);
    for (const auto& d : s.deltas)
        if (d.metric == 0 || d.metric == 1 || d.metric == 3) CHECK(d.delta_pct == 0.0);

    CHECK(percent_delta(49.1, 100.0) == doctest::Approx(-50.9));
    CHECK(std::isnan(percent_delta(1.0, 0.0)));

    auto one = summarize(std::vector<ResultRow>{row("a", 10, 1, 3.0)});
    CHECK(one.find("a", 10, 0)->stddev == 0.0);
    CHECK(one.find("a", 10, 0)->n == 1);

    std::vector<ResultRow> pair{row("a", 10, 1, 49.1), row("b", 10, 1, 100.0), row("a", 10, 2, 49.1),
                                row("b", 10, 2, 100.0)};
    auto p = summarize(pair);
    bool found = false;
    for (const auto& d : p.deltas)
        if (d.a == "a" && d.b == "b" && d.metric == 0) {
            CHECK(d.delta_pct == doctest::Approx(-50.9));
            found = true;
        }
    CHECK(found);

    std::vector<ResultRow> stats{row("a", 10, 1, 1.0), row("a", 10, 2, 2.0), row("a", 10, 3, 6.0)};
    auto st = summarize(stats).find("a", 10, 0);
    CHECK(st->mean == doctest::Approx(3.0));
    CHECK(st->median == doctest::Approx(2.0));
    CHECK(st->stddev == doctest::Approx(std::sqrt(7.0)));

    CHECK_THROWS_AS(summarize(std::vector<ResultRow>{}), PreconditionError);
    auto failed = row("a", 10, 1, 1.0);
    failed.ok = false;
    CHECK_THROWS_AS(summarize(std::vector<ResultRow>{failed}), PreconditionError);
}

TEST_CASE("emit_report writes the documented files") {
    auto dir = std::filesystem::path(CLOUDSCHED_TEST_TMP) / "report";
    std::filesystem::remove_all(dir);
    auto rows = run_experiment(small_config());
    auto summary = summarize(rows);
    emit_report(rows, summary, dir);
    for (const char* f : {"results.csv", "summary.csv", "deltas.csv", "plot.py"}) CHECK(std::filesystem::exists(dir / f));
    auto results = slurp(dir / "results.csv");
    CHECK(results.rfind(std::string(kResultsHeader) + "\n", 0) == 0);
    CHECK(slurp(dir / "summary.csv").rfind(std::string(kSummaryHeader) + "\n", 0) == 0);
    CHECK(slurp(dir / "deltas.csv").rfind(std::string(kDeltasHeader) + "\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(results.begin(), results.end(), '\n')) == rows.size() + 1);
    CHECK(read_results_csv(dir / "results.csv").size() == rows.size());

    auto plot = slurp(dir / "plot.py");
    CHECK(plot.find("summary.csv") != std::string::npos);
    for (const char* other : {"timings.csv", "trace.csv"}) CHECK(plot.find(other) == std::string::npos);

    CHECK_THROWS_AS(emit_report(rows, summary, dir / "results.csv" / "sub"), IoError);
}

TEST_CASE("scheduler kinds") {
    CHECK(parse_scheduler_kind("gaaco") == SchedulerKind::gaaco);
    CHECK(parse_scheduler_kind("eft") == SchedulerKind::eft);
    CHECK(to_string(SchedulerKind::sa) == "sa");
    CHECK_THROWS_AS(parse_scheduler_kind("pso"), ConfigError);
}

TEST_CASE("shipped default config reproduces the built-in defaults") {
    auto shipped = load_experiment_config(std::filesystem::path(CLOUDSCHED_SOURCE_DIR) / "configs" / "default.json");
    auto builtin = ExperimentConfig::defaults();
    CHECK(shipped.sweep.counts() == builtin.sweep.counts());
    CHECK(shipped.seeds == builtin.seeds);
    for (auto* c : {&shipped, &builtin}) {
        c->sweep = {10, 20, 10};
        c->seeds = {4};
    }
    std::ostringstream a, b;
    write_results_csv(a, run_experiment(shipped));
    write_results_csv(b, run_experiment(builtin));
    CHECK(a.str() == b.str());
}
