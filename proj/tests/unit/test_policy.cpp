#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/policy.hpp"
#include "cloudsched/rl_env.hpp"

using namespace cloudsched;
using namespace cloudsched::rl;
using fixtures::make_task;
using fixtures::make_vm;

namespace {

WorkloadSet two_vm(std::vector<Task> tasks) {
    WorkloadSet w;
    w.vms = {make_vm(0, 1000.0), make_vm(1, 2000.0)};
    w.tasks = std::move(tasks);
    return w;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("encode_state examples") {
    EncoderConfig cfg;
    auto idle = two_vm({make_task(1, 1000.0, 5.0)});
    sim::SimState s(idle);
    auto v = encode_state(s, cfg);
    CHECK(v.size() == cfg.dimension());
    for (double x : v) CHECK(x == 0.0);

    auto busy = two_vm({make_task(1, 100000.0)});
    sim::SimState b(busy);
    b.step(sim::Action::dispatch(1, 0));
    auto e = encode_state(b, cfg);
    for (std::size_t j = 0; j < cfg.lookahead; ++j) {
        CHECK(e[j] == 1.0);
        CHECK(e[cfg.lookahead + j] == 0.0);
    }

    WorkloadSet three = idle;
    three.vms.push_back(make_vm(2, 1000.0));
    CHECK_THROWS_AS(encode_state(sim::SimState(three), cfg), ShapeError);
}

TEST_CASE("encoding dimension is independent of task count") {
    EncoderConfig cfg;
    WorkloadGenConfig gen;
    gen.vm_count = 2;
    gen.with_profiles = false;
    Rng rng(2);
    for (std::size_t n : {5, 500}) {
        auto w = make_workload(n, 3, gen);
        sim::SimState s(w);
        for (int k = 0; k < 20 && !s.done(); ++k) {
            auto v = encode_state(s, cfg);
            CHECK(v.size() == cfg.dimension());
            for (double x : v) {
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
            }
            if (!s.ready().empty() && uniform01(rng) < 0.5)
                s.step(sim::Action::dispatch(w.tasks[s.ready()[0]].id, w.vms[uniform_index(rng, 2)].id));
            else if (s.can_advance())
                s.step(sim::Action::noop());
        }
    }
}

TEST_CASE("mask and decode") {
    EncoderConfig cfg;
    auto w = two_vm({make_task(1, 1000.0), make_task(2, 1000.0), make_task(3, 1000.0, 9.0)});
    sim::SimState s(w);
    auto mask = action_mask(s, cfg);
    REQUIRE(mask.size() == cfg.actions());
    CHECK(std::accumulate(mask.begin(), mask.end(), 0) == 2 * 2 + 1);
    auto act = decode_action(s, cfg, 1 * cfg.machines + 1);
    CHECK(act.kind == sim::Action::Kind::dispatch);
    CHECK(act.task == 2);
    CHECK(act.machine == 1);
    CHECK(decode_action(s, cfg, cfg.noop_action()).kind == sim::Action::Kind::noop);
}

TEST_CASE("policy_forward examples") {
    auto zero = PolicyParams::zeros(6, 4, 5);
    std::vector<double> s(6, 0.3);
    std::vector<char> mask{1, 0, 1, 1, 0};
    auto p = policy_forward(zero, s, mask);
    CHECK(p[0] == doctest::Approx(1.0 / 3.0));
    CHECK(p[1] == 0.0);
    CHECK(p[4] == 0.0);

    auto r = PolicyParams::random(6, 4, 5, 1, 2.0);
    std::vector<char> only{0, 0, 0, 1, 0};
    auto q = policy_forward(r, s, only);
    CHECK(q[3] == 1.0);

    std::vector<double> wrong(5, 0.0);
    CHECK_THROWS_AS(policy_forward(r, wrong, mask), ShapeError);
    std::vector<char> none(5, 0);
    CHECK_THROWS_AS(policy_forward(r, s, none), PreconditionError);
}

TEST_CASE("probabilities sum to one over 1000 random draws") {
    Rng rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        auto c = fixtures::random_gradient_case(rng);
        auto p = policy_forward(c.params, c.state, c.mask);
        CHECK(std::abs(sum(p) - 1.0) <= 1e-9);
        for (std::size_t a = 0; a < p.size(); ++a) {
            CHECK(p[a] >= 0.0);
            if (!c.mask[a]) CHECK(p[a] == 0.0);
        }
    }
}

TEST_CASE("masked actions are never sampled over 1e5 draws") {
    Rng rng(5);
    auto params = PolicyParams::random(4, 3, 6, 11, 3.0);
    std::vector<double> s{0.1, 0.9, 0.4, 0.7};
    std::vector<char> mask{1, 0, 1, 0, 0, 1};
    auto p = policy_forward(params, s, mask);
    for (int i = 0; i < 100000; ++i) CHECK(mask[sample_action(p, uniform01(rng))]);
    CHECK(mask[sample_action(p, 1.0)]);
    CHECK(mask[sample_action(p, 0.0)]);
    CHECK(mask[greedy_action(p)]);
}

TEST_CASE("compute_returns examples and recursion") {
    std::vector<double> r{1, 1, 1};
    CHECK(compute_returns(r, 0.5) == std::vector<double>{1.75, 1.5, 1.0});
    CHECK(compute_returns(r, 1.0) == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(compute_returns(std::vector<double>{}, 0.9).empty());
    CHECK_THROWS_AS(compute_returns(r, 0.0), ConfigError);
    CHECK_THROWS_AS(compute_returns(r, 1.5), ConfigError);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> rewards(1 + uniform_index(rng, 30));
        for (auto& x : rewards) x = uniform01(rng) * 4.0 - 2.0;
        double g = 0.01 + 0.99 * uniform01(rng);
        auto v = compute_returns(rewards, g);
        CHECK(v.back() == rewards.back());
        for (std::size_t t = 0; t + 1 < v.size(); ++t) CHECK(v[t] == rewards[t] + g * v[t + 1]);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(2);
    // four-action toy policy
    auto p = PolicyParams::random(3, 5, 4, 9, 0.8);
    std::vector<double> s{0.2, 0.5, 0.9};
    std::vector<char> mask(4, 1);
    for (std::size_t a = 0; a < 4; ++a) CHECK(fixtures::gradient_rel_error(p, s, mask, a) <= 1e-4);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = fixtures::random_gradient_case(rng);
        CHECK(fixtures::gradient_rel_error(c.params, c.state, c.mask, c.action) <= 1e-4);
    }
}

TEST_CASE("reinforce_update examples") {
    TrainConfig cfg;
    cfg.baseline = Baseline::none;
    auto p = PolicyParams::random(3, 4, 3, 1);
    Trajectory zero;
    zero.states = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    zero.masks = {{1, 1, 1}, {1, 0, 1}};
    zero.actions = {0, 2};
    zero.rewards = {0.0, 0.0};
    CHECK(reinforce_update(p, zero, cfg) == p);

    Trajectory one;
    one.states = {{0.7, 0.1, 0.4}};
    one.masks = {{1, 1, 1}};
    one.actions = {1};
    one.rewards = {2.0};
    auto before = policy_forward(p, one.states[0], one.masks[0]);
    auto updated = reinforce_update(p, one, cfg);
    auto after = policy_forward(updated, one.states[0], one.masks[0]);
    CHECK(after[1] > before[1]);

    Trajectory empty;
    CHECK_THROWS(reinforce_update(p, empty, cfg));

    Trajectory bad = one;
    bad.rewards = {std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(reinforce_update(p, bad, cfg), Error);
}

TEST_CASE("reinforce_update applies exactly the ascent step") {
    TrainConfig cfg;
    cfg.baseline = Baseline::none;
    cfg.alpha = 0.05;
    cfg.gamma = 0.9;
    auto p = PolicyParams::random(3, 4, 3, 2, 0.5);
    Trajectory t;
    t.states = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.9, 0.1, 0.5}};
    t.masks = {{1, 1, 1}, {1, 0, 1}, {0, 1, 1}};
    t.actions = {0, 2, 1};
    t.rewards = {-1.0, 0.5, -2.0};
    auto v = compute_returns(t.rewards, cfg.gamma);
    std::vector<double> expect = p.theta;
    for (std::size_t k = 0; k < 3; ++k) {
        auto g = grad_log_prob(p, t.states[k], t.masks[k], t.actions[k]);
        for (std::size_t i = 0; i < g.size(); ++i) expect[i] += cfg.alpha * g[i] * v[k];
    }
    auto got = reinforce_update(p, t, cfg);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(got.theta[i] == doctest::Approx(expect[i]).epsilon(1e-12));

    cfg.baseline = Baseline::mean_return;
    double b = (v[0] + v[1] + v[2]) / 3.0;
    expect = p.theta;
    for (std::size_t k = 0; k < 3; ++k) {
        auto g = grad_log_prob(p, t.states[k], t.masks[k], t.actions[k]);
        for (std::size_t i = 0; i < g.size(); ++i) expect[i] += cfg.alpha * g[i] * (v[k] - b);
    }
    got = reinforce_update(p, t, cfg);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(got.theta[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("train config validation and names") {
    TrainConfig c;
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.alpha = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_baseline("none") == Baseline::none);
    CHECK(parse_baseline("mean-return") == Baseline::mean_return);
    CHECK_THROWS_AS(parse_baseline("critic"), ConfigError);
}

TEST_CASE("parameter initialization") {
    auto p = PolicyParams::random(10, 16, 9, 3);
    CHECK(p.theta.size() == PolicyParams::parameter_count(10, 16, 9));
    CHECK(PolicyParams::parameter_count(10, 16, 9) == 16 * 10 + 16 + 9 * 16 + 9);
    for (double x : p.theta) CHECK(std::abs(x) <= 0.05);
    CHECK(PolicyParams::random(10, 16, 9, 3) == p);
}

TEST_CASE("environment episodes") {
    EnvConfig env;
    env.reward = wait_only_reward();
    auto w = std::make_shared<const WorkloadSet>(make_toy_workload(5));
    SchedulingEnv e(w, env);
    e.reset();
    Rng rng(1);
    auto params = PolicyParams::random(env.encoder.dimension(), 8, env.encoder.actions(), 3);
    auto ep = rollout(params, e, ActionMode::sample, rng);
    CHECK(e.finished());
    CHECK_FALSE(ep.truncated);
    ep.trajectory.validate();
    CHECK(ep.total_return <= 0.0);
    CHECK(ep.total_return == doctest::Approx(ep.trajectory.total_reward()));

    auto trace = run_policy(params, env.encoder, *w);
    CHECK(trace.tasks.size() == w->tasks.size());
}

TEST_CASE("wait-only episode return equals minus the wait-time integral") {
    EnvConfig env;
    env.reward = wait_only_reward();
    auto w = std::make_shared<const WorkloadSet>(make_toy_workload(12));
    SchedulingEnv e(w, env);
    double total = e.reset();
    Rng rng(3);
    while (!e.finished()) {
        auto mask = e.mask();
        std::vector<std::size_t> valid;
        for (std::size_t a = 0; a < mask.size(); ++a)
            if (mask[a]) valid.push_back(a);
        total += e.step(valid[uniform_index(rng, valid.size())]);
    }
    auto tr = e.sim().trace();
    double waited = 0.0;
    for (const auto& r : tr.tasks) waited += r.start - r.ready;
    CHECK(total == doctest::Approx(-waited));
}

TEST_CASE("training: zero episodes, determinism, divergence") {
    EnvConfig env;
    env.reward = wait_only_reward();
    WorkloadSource src = [](std::size_t e) {
        return std::make_shared<const WorkloadSet>(make_toy_workload(derive_seed(1, {e})));
    };
    TrainConfig c;
    c.episodes = 0;
    auto init = PolicyParams::random(env.encoder.dimension(), c.hidden, env.encoder.actions(), 4);
    auto r0 = train(src, env, c, init);
    CHECK(r0.curve.empty());
    CHECK(r0.params == init);

    c.episodes = 30;
    auto a = train(src, env, c);
    auto b = train(src, env, c);
    CHECK(a.curve.size() == 30);
    CHECK(a.curve == b.curve);
    CHECK(a.params == b.params);

    c.alpha = 1e6;
    c.divergence_bound = 1.0;
    try {
        train(src, env, c);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
}

TEST_CASE("policy files round trip") {
    EncoderConfig enc;
    enc.ready_slots = 3;
    auto p = PolicyParams::random(enc.dimension(), 5, enc.actions(), 8);
    std::stringstream ss;
    save_policy(ss, p, enc);
    CHECK(ss.str().rfind("cloudsched-policy 1\n", 0) == 0);
    auto back = load_policy(ss);
    CHECK(back.encoder == enc);
    CHECK(back.params == p);

    std::stringstream bad("not-a-policy\n");
    CHECK_THROWS(load_policy(bad));
}

TEST_CASE("toy learning beats uniform dispatch") {
    auto out = fixtures::rl_toy_run(1, 200, ActionMode::greedy, 20);
    CHECK(out.trained > out.uniform);
}
