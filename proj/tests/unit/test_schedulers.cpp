#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/evaluator.hpp"
#include "cloudsched/metrics.hpp"
#include "cloudsched/schedulers.hpp"

using namespace cloudsched;
using namespace cloudsched::sched;
using fixtures::make_task;
using fixtures::make_vm;

namespace {

WorkloadSet instance(std::vector<double> lengths, std::vector<double> mips) {
    WorkloadSet w;
    for (std::size_t m = 0; m < mips.size(); ++m) w.vms.push_back(make_vm(static_cast<MachineId>(m), mips[m]));
    for (std::size_t i = 0; i < lengths.size(); ++i) w.tasks.push_back(make_task(static_cast<TaskId>(i + 1), lengths[i]));
    return w;
}

bool same_fitness(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("GAACO defaults are the published parameter table") {
    GaacoParams p;
    CHECK(p.evolution_num == 100);
    CHECK(p.population == 10);
    CHECK(p.ants == 31);
    CHECK(p.pc == 0.35);
    CHECK(p.pm == 0.08);
    CHECK(p.alpha_max == 1.00);
    CHECK(p.beta_max == 2.00);
    CHECK(p.rho_max == 0.10);
    CHECK(p.q == 50.00);

    std::ostringstream out;
    print_params(out, p);
    auto s = out.str();
    for (const char* v : {" 100\n", " 10\n", " 31\n", " 0.35\n", " 0.08\n", " 1.00\n", " 2.00\n", " 0.10\n", " 50.00\n"})
        CHECK(s.find(v) != std::string::npos);
}

TEST_CASE("parameter validation") {
    GaacoParams g;
    g.pc = 1.5;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = {};
    g.rho_max = 0.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = {};
    g.population = 0;
    CHECK_THROWS_AS(g.validate(), ConfigError);

    AcoParams a;
    a.tau_min = 5.0;
    a.tau_max = 1.0;
    CHECK_THROWS_AS(a.validate(), ConfigError);

    SaParams s;
    s.min_temp = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.cooling_rate = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("fitness examples") {
    WorkloadSet w;
    w.vms = {make_vm(0, 1000.0), make_vm(1, 1000.0)};
    w.tasks = {make_task(1, 1000.0)};
    w.tasks[0].deadline = 0.5;
    sim::Assignment a;
    a.machine_of[1] = 0;
    std::vector<sim::Assignment> pool{a};
    metrics::QosWeights wts;
    auto f = fitness(pool, w, wts);
    REQUIRE(f.size() == 1);
    CHECK(f[0] == doctest::Approx(wts.reliability * 1.0));

    metrics::QosWeights bad{0.5, 0.5, 0.5};
    CHECK_THROWS_AS(fitness(pool, w, bad), ConfigError);

    std::vector<metrics::QosPoint> two{{10.0, 1.0, 1.0}, {20.0, 1.0, 1.0}};
    auto s = metrics::multi_qos(two, wts);
    CHECK(s[0] == doctest::Approx(0.0));
    CHECK(s[1] == doctest::Approx(wts.time));
}

TEST_CASE("weights (1,0,0): argmin fitness is argmin time over an enumerated pool") {
    auto w = instance({1000, 2000, 1500}, {1000, 500});
    ScheduleEvaluator ev(w);
    std::vector<sim::Assignment> pool;
    std::vector<double> times;
    for (std::size_t code = 0; code < 8; ++code) {
        std::vector<std::size_t> genes{code & 1, (code >> 1) & 1, (code >> 2) & 1};
        pool.push_back(ev.to_assignment(genes));
        times.push_back(ev.evaluate(genes).flow_time);
    }
    auto f = fitness(pool, w, {1.0, 0.0, 0.0});
    auto fi = std::min_element(f.begin(), f.end()) - f.begin();
    auto ti = std::min_element(times.begin(), times.end()) - times.begin();
    CHECK(fi == ti);
}

TEST_CASE("evaluator agrees with the simulator") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        auto w = trial % 2 ? fixtures::random_small_instance(1 + uniform_index(rng, 12), 1 + uniform_index(rng, 4), rng())
                           : fixtures::random_dag_workload(1 + uniform_index(rng, 10), 1 + uniform_index(rng, 3), rng());
        ScheduleEvaluator ev(w);
        std::vector<std::size_t> genes(w.tasks.size());
        for (auto& g : genes) g = uniform_index(rng, w.vms.size());
        auto e = ev.evaluate(genes);
        auto tr = sim::run_simulation(w, ev.to_assignment(genes));
        CHECK(e.flow_time == doctest::Approx(metrics::time_cost(tr)).epsilon(1e-12));
        CHECK(e.money_cost == doctest::Approx(metrics::money_cost(tr, w.vms)).epsilon(1e-12));
        CHECK(e.reliability == doctest::Approx(metrics::reliability(tr)));
        CHECK(e.makespan == doctest::Approx(tr.makespan));
        CHECK(ev.to_genes(ev.to_assignment(genes)) == genes);
    }
}

TEST_CASE("empty task list is an error for every scheduler") {
    WorkloadSet w;
    w.vms = {make_vm(0, 1000.0)};
    CHECK_THROWS_AS(aco_schedule(w, {}, 1), PreconditionError);
    CHECK_THROWS_AS(sa_schedule(w, {}, 1), PreconditionError);
    CHECK_THROWS_AS(gaaco_schedule(w, {}, 1), PreconditionError);
    CHECK_THROWS_AS(eft_schedule(w), PreconditionError);
}

TEST_CASE("one task on one vm is forced") {
    auto w = instance({1000}, {1000});
    GaacoParams g;
    g.evolution_num = 1;
    CHECK(gaaco_schedule(w, g, 1).assignment.at(1) == 0);
    CHECK(aco_schedule(w, {}, 1).assignment.at(1) == 0);
    CHECK(sa_schedule(w, {}, 1).assignment.at(1) == 0);
    CHECK(brute_force_schedule(w, Objective::makespan()).assignment.at(1) == 0);
}

TEST_CASE("sa_accept rule") {
    Rng rng(1);
    for (double t : {1e-6, 0.01, 1.0, 100.0}) CHECK(sa_accept(-1.0, t, rng));
    int accepted = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) accepted += sa_accept(1.0, 1.0, rng);
    CHECK(std::abs(accepted / double(trials) - std::exp(-1.0)) <= 0.03);
}

TEST_CASE("SA halts below min_temp with best-so-far") {
    auto w = fixtures::random_small_instance(6, 3, 4);
    SaParams p;
    p.initial_temp = 0.1;
    p.cooling_rate = 0.5;
    p.min_temp = 0.01;
    p.steps_per_temp = 3;
    auto r = sa_schedule(w, p, 2);
    // levels 0.1, 0.05, 0.025, 0.0125
    CHECK(r.history.size() == 4);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.fitness == r.history.back());
}

TEST_CASE("SA reassign neighborhood changes one task per move") {
    auto w = fixtures::random_small_instance(8, 3, 5);
    SaParams p;
    p.neighborhood = SaNeighborhood::reassign;
    auto r = sa_schedule(w, p, 9);
    ScheduleEvaluator ev(w);
    auto bf = brute_force_schedule(w, Objective::anchored_qos(ev));
    CHECK(r.fitness >= bf.fitness - 1e-12);
    CHECK(r.genes.size() == 8);
    CHECK(sa_schedule(w, p, 9).genes == r.genes);
}

TEST_CASE("SA swap neighborhood keeps the round-robin spread") {
    auto w = fixtures::random_small_instance(12, 4, 6);
    auto r = sa_schedule(w, {}, 3);
    std::vector<int> counts(4, 0);
    for (auto g : r.genes) ++counts[g];
    for (int c : counts) CHECK(c == 3);
}

TEST_CASE("GAACO history is nonincreasing and deterministic") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        auto w = fixtures::random_small_instance(10 + uniform_index(rng, 20), 2 + uniform_index(rng, 4), rng());
        GaacoParams p;
        p.evolution_num = 30;
        auto r = gaaco_schedule(w, p, trial);
        CHECK(r.history.size() == 30);
        for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
        CHECK(r.history.back() == r.fitness);
        auto again = gaaco_schedule(w, p, trial);
        CHECK(again.genes == r.genes);
        CHECK(again.history == r.history);
    }
}

TEST_CASE("GAACO finds the 5x3 optimum in at least 80% of seeds") {
    auto w = fixtures::random_small_instance(5, 3, 123);
    ScheduleEvaluator ev(w);
    auto obj = Objective::anchored_qos(ev);
    auto bf = brute_force_schedule(w, obj);
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto r = gaaco_schedule(w, {}, seed, obj);
        CHECK(r.fitness >= bf.fitness - 1e-12);
        hits += same_fitness(r.fitness, bf.fitness);
    }
    CHECK(hits >= 16);
}

TEST_CASE("ACO finds the 4x2 optimum in at least 60% of seeds") {
    auto w = fixtures::random_small_instance(4, 2, 321);
    ScheduleEvaluator ev(w);
    auto obj = Objective::anchored_qos(ev);
    auto bf = brute_force_schedule(w, obj);
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto r = aco_schedule(w, {}, seed, obj);
        CHECK(r.fitness >= bf.fitness - 1e-12);
        hits += same_fitness(r.fitness, bf.fitness);
    }
    CHECK(hits >= 12);
}

TEST_CASE("ACO pheromone stays within bounds after every update") {
    auto w = fixtures::random_small_instance(15, 4, 8);
    ScheduleEvaluator ev(w);
    AcoParams p;
    p.tau_min = 0.05;
    p.tau_max = 2.0;
    p.rho = 0.5;
    p.q = 100.0;
    std::size_t updates = 0;
    aco_schedule(w, p, 1, Objective::anchored_qos(ev), [&](std::size_t, std::span<const double> tau) {
        ++updates;
        CHECK(tau.size() == 15 * 4);
        for (double t : tau) {
            CHECK(t >= p.tau_min);
            CHECK(t <= p.tau_max);
        }
    });
    CHECK(updates == p.iterations);
}

TEST_CASE("schedulers are pure functions of inputs and seed") {
    auto w = fixtures::random_small_instance(20, 3, 44);
    CHECK(aco_schedule(w, {}, 5).genes == aco_schedule(w, {}, 5).genes);
    CHECK(sa_schedule(w, {}, 5).genes == sa_schedule(w, {}, 5).genes);
    GaacoParams g;
    g.evolution_num = 10;
    CHECK(gaaco_schedule(w, g, 5).genes == gaaco_schedule(w, g, 5).genes);
    CHECK(eft_schedule(w).genes == eft_schedule(w).genes);
}

TEST_CASE("EFT examples") {
    auto two = instance({1000, 2000}, {1000, 1000});
    auto r = eft_schedule(two);
    CHECK(r.evaluation.makespan == doctest::Approx(2.0));
    CHECK(r.assignment.at(1) != r.assignment.at(2));

    auto serial = instance({1000, 2000, 500, 700}, {1000});
    CHECK(eft_schedule(serial).evaluation.makespan == doctest::Approx(4.2));

    auto chain = instance({1000, 1000}, {1000, 1000});
    chain.tasks[0].input_mb = 100.0;
    chain.tasks[1].output_mb = 200.0;
    chain.edges = {{1, 2}};
    auto c = eft_schedule(chain);
    CHECK(c.evaluation.makespan == doctest::Approx(1.1 + 1.2));

    auto cyclic = chain;
    cyclic.edges = {{1, 2}, {2, 1}};
    CHECK_THROWS_AS(eft_schedule(cyclic), ValidationError);
}

TEST_CASE("brute force examples") {
    auto w = instance({1, 2, 3}, {1, 1});
    auto r = brute_force_schedule(w, Objective::makespan());
    CHECK(r.fitness == doctest::Approx(3.0));
    CHECK(r.evaluations == 8);
    CHECK(r.assignment.at(1) == r.assignment.at(2));
    CHECK(r.assignment.at(3) != r.assignment.at(1));

    auto tie = instance({1, 2, 3}, {1, 1});
    auto c = brute_force_schedule(tie, Objective::money_cost());
    CHECK(c.genes == std::vector<std::size_t>{0, 0, 0});

    std::vector<double> lengths(20, 1.0);
    CHECK_THROWS_AS(brute_force_schedule(instance(lengths, {1, 1}), Objective::makespan()), SizeError);
    CHECK_NOTHROW(brute_force_schedule(instance({1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}), Objective::makespan()));
}

TEST_CASE("no scheduler beats the oracle on small instances") {
    Rng rng(91);
    for (int trial = 0; trial < 20; ++trial) {
        auto w = fixtures::random_small_instance(1 + uniform_index(rng, 5), 1 + uniform_index(rng, 3), rng());
        ScheduleEvaluator ev(w);
        auto obj = Objective::anchored_qos(ev);
        double best = brute_force_schedule(w, obj).fitness;
        GaacoParams g;
        g.evolution_num = 20;
        CHECK(gaaco_schedule(w, g, trial, obj).fitness >= best - 1e-12);
        CHECK(aco_schedule(w, {}, trial, obj).fitness >= best - 1e-12);
        CHECK(sa_schedule(w, {}, trial, obj).fitness >= best - 1e-12);
        CHECK(obj(ev.evaluate(eft_schedule(w).genes)) >= best - 1e-12);
    }
}

TEST_CASE("balance term of the default GAACO objective") {
    auto w = instance({1000, 1000, 1000, 1000}, {1000, 1000});
    ScheduleEvaluator ev(w);
    GaacoParams p;
    auto obj = gaaco_objective(ev, {}, p);
    CHECK(obj.balance_weight() == p.balance_weight);
    std::vector<std::size_t> even{0, 1, 0, 1}, all{0, 0, 0, 0};
    CHECK(ev.evaluate(even).task_balance == 0.0);
    CHECK(ev.evaluate(all).task_balance == doctest::Approx(1.0));
    auto plain = Objective::anchored_qos(ev);
    CHECK(obj(ev.evaluate(all)) == doctest::Approx(plain(ev.evaluate(all)) + p.balance_weight));
    CHECK_THROWS_AS(plain.with_balance(-1.0), ConfigError);
}
