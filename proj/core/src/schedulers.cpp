#include "cloudsched/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "cloudsched/error.hpp"

namespace cloudsched::sched {

namespace {

void require_instance(const WorkloadSet& w) {
    if (w.tasks.empty()) throw PreconditionError("scheduler needs at least one task");
    if (w.vms.empty()) throw PreconditionError("scheduler needs at least one vm");
}

bool unit(double p) { return p >= 0.0 && p <= 1.0; }

struct Candidate {
    std::vector<std::size_t> genes;
    double fitness = 0.0;
    Evaluation eval;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
    return a.genes < b.genes;
}

class Scorer {
public:
    Scorer(const ScheduleEvaluator& ev, const Objective& obj) : ev_(ev), obj_(obj) {}

    Candidate score(std::vector<std::size_t> genes) {
        Candidate c;
        c.eval = ev_.evaluate(genes);
        c.fitness = obj_(c.eval);
        c.genes = std::move(genes);
        ++count_;
        return c;
    }
    std::size_t count() const { return count_; }

private:
    const ScheduleEvaluator& ev_;
    const Objective& obj_;
    std::size_t count_ = 0;
};

ScheduleResult finish(const ScheduleEvaluator& ev, const Candidate& best, std::vector<double> history,
                      std::size_t evaluations) {
    ScheduleResult r;
    r.assignment = ev.to_assignment(best.genes);
    r.genes = best.genes;
    r.fitness = best.fitness;
    r.evaluation = best.eval;
    r.history = std::move(history);
    r.evaluations = evaluations;
    return r;
}

std::vector<std::size_t> random_genes(std::size_t n, std::size_t m, Rng& rng) {
    std::vector<std::size_t> g(n);
    for (auto& x : g) x = uniform_index(rng, m);
    return g;
}

/// One ant walk over the construction order. Heuristic desirability is the
/// inverse of the task's estimated completion time on each vm given the loads
/// placed so far by this ant.
std::vector<std::size_t> construct(const ScheduleEvaluator& ev, std::span<const double> tau, double alpha,
                                   double beta, Rng& rng) {
    const std::size_t m = ev.vm_count();
    std::vector<double> free_at(m, 0.0);
    std::vector<double> weight(m);
    std::vector<std::size_t> genes(ev.task_count());
    const auto& tasks = ev.workload().tasks;
    for (std::size_t i : ev.order()) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double est = std::max(free_at[j], tasks[i].arrival) + ev.duration(i, j);
            weight[j] = std::pow(tau[i * m + j], alpha) * std::pow(1.0 / est, beta);
            total += weight[j];
        }
        std::size_t pick = m - 1;
        double u = uniform01(rng) * total;
        for (std::size_t j = 0; j < m; ++j) {
            if (u < weight[j]) {
                pick = j;
                break;
            }
            u -= weight[j];
        }
        genes[i] = pick;
        free_at[pick] = std::max(free_at[pick], tasks[i].arrival) + ev.duration(i, pick);
    }
    return genes;
}

/// First-improvement sweeps of single-task reassignments and pairwise swaps.
Candidate refine(Scorer& scorer, Candidate c, std::size_t m, std::size_t sweeps) {
    const std::size_t n = c.genes.size();
    auto attempt = [&](std::vector<std::size_t> g) {
        Candidate next = scorer.score(std::move(g));
        if (next.fitness >= c.fitness) return false;
        c = std::move(next);
        return true;
    };
    for (std::size_t s = 0; s < sweeps; ++s) {
        bool improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (j == c.genes[i]) continue;
                std::vector<std::size_t> g = c.genes;
                g[i] = j;
                improved |= attempt(std::move(g));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = i + 1; k < n; ++k) {
                if (c.genes[i] == c.genes[k]) continue;
                std::vector<std::size_t> g = c.genes;
                std::swap(g[i], g[k]);
                improved |= attempt(std::move(g));
            }
        }
        if (!improved) break;
    }
    return c;
}

void deposit(std::vector<double>& tau, std::size_t m, std::span<const std::size_t> genes, double amount) {
    for (std::size_t i = 0; i < genes.size(); ++i) tau[i * m + genes[i]] += amount;
}

void evaporate(std::vector<double>& tau, double rho) {
    for (double& t : tau) t *= 1.0 - rho;
}

void clamp_all(std::vector<double>& tau, double lo, double hi) {
    for (double& t : tau) t = std::clamp(t, lo, hi);
}

}  // namespace

void GaacoParams::validate() const {
    if (evolution_num < 1 || population < 1 || ants < 1) throw ConfigError("GAACO counts must be >= 1");
    if (!(balance_weight >= 0.0)) throw ConfigError("GAACO balance_weight must be >= 0");
    if (!unit(pc) || !unit(pm)) throw ConfigError("GAACO probabilities must lie in [0,1]");
    if (!(alpha_max > 0.0) || !(beta_max > 0.0) || !(q > 0.0)) {
        throw ConfigError("GAACO alpha_max, beta_max and q must be > 0");
    }
    if (!(rho_max > 0.0 && rho_max <= 1.0)) throw ConfigError("GAACO rho_max must lie in (0,1]");
}

void AcoParams::validate() const {
    if (ants < 1 || iterations < 1) throw ConfigError("ACO counts must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("ACO rho must lie in (0,1]");
    if (!(tau_min > 0.0) || !(tau_min <= tau_max)) throw ConfigError("ACO requires 0 < tau_min <= tau_max");
    if (alpha < 0.0 || beta < 0.0 || !(q > 0.0)) throw ConfigError("ACO alpha, beta must be >= 0 and q > 0");
}

void SaParams::validate() const {
    if (!(min_temp > 0.0) || !(initial_temp > min_temp)) throw ConfigError("SA requires initial_temp > min_temp > 0");
    if (!(cooling_rate > 0.0 && cooling_rate < 1.0)) throw ConfigError("SA cooling_rate must lie in (0,1)");
    if (steps_per_temp < 1) throw ConfigError("SA steps_per_temp must be >= 1");
}

void print_params(std::ostream& out, const GaacoParams& p) {
    auto fixed2 = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", x);
        return std::string(buf);
    };
    out << "GAACO parameters\n"
        << "  evolution_num  Evolution generations                   " << p.evolution_num << '\n'
        << "  population     Population size                         " << p.population << '\n'
        << "  m              Number of ants                          " << p.ants << '\n'
        << "  pc             Crossover probability                   " << fixed2(p.pc) << '\n'
        << "  pm             Maximum mutation probability            " << fixed2(p.pm) << '\n'
        << "  alpha_max      Maximum pheromone factor                " << fixed2(p.alpha_max) << '\n'
        << "  beta_max       Maximum expected pheromone factor       " << fixed2(p.beta_max) << '\n'
        << "  rho_max        Maximum pheromone evaporation coefficient " << fixed2(p.rho_max) << '\n'
        << "  q              Maximum pheromone intensity             " << fixed2(p.q) << '\n';
}

void print_params(std::ostream& out, const AcoParams& p) {
    out << "ACO parameters\n"
        << "  ants " << p.ants << "\n  iterations " << p.iterations << "\n  alpha " << p.alpha << "\n  beta "
        << p.beta << "\n  rho " << p.rho << "\n  q " << p.q << "\n  tau_min " << p.tau_min << "\n  tau_max "
        << p.tau_max << '\n';
}

void print_params(std::ostream& out, const SaParams& p) {
    out << "SA parameters\n"
        << "  initial_temp " << p.initial_temp << "\n  cooling_rate " << p.cooling_rate << "\n  steps_per_temp "
        << p.steps_per_temp << "\n  min_temp " << p.min_temp << "\n  neighborhood "
        << (p.neighborhood == SaNeighborhood::swap ? "swap" : "reassign") << '\n';
}

std::vector<double> fitness(std::span<const sim::Assignment> pool, const WorkloadSet& workload,
                            const metrics::QosWeights& weights) {
    weights.validate();
    std::vector<sim::SimTrace> traces;
    traces.reserve(pool.size());
    for (const auto& a : pool) traces.push_back(sim::run_simulation(workload, a));
    return metrics::multi_qos(traces, workload.vms, weights);
}

// ---------------------------------------------------------------------------
// ACO

ScheduleResult aco_schedule(const WorkloadSet& w, const AcoParams& params, std::uint64_t seed) {
    require_instance(w);
    const ScheduleEvaluator ev(w);
    return aco_schedule(w, params, seed, Objective::anchored_qos(ev));
}

ScheduleResult aco_schedule(const WorkloadSet& w, const AcoParams& params, std::uint64_t seed,
                            const Objective& objective, const PheromoneObserver& observer) {
    require_instance(w);
    params.validate();
    const ScheduleEvaluator ev(w);
    Scorer scorer(ev, objective);
    Rng rng(seed);
    const std::size_t m = ev.vm_count();
    std::vector<double> tau(ev.task_count() * m, params.tau_max);

    Candidate best;
    bool have_best = false;
    std::vector<double> history;
    for (std::size_t it = 0; it < params.iterations; ++it) {
        Candidate iter_best;
        for (std::size_t a = 0; a < params.ants; ++a) {
            Candidate c = scorer.score(construct(ev, tau, params.alpha, params.beta, rng));
            if (a == 0 || better(c, iter_best)) iter_best = std::move(c);
        }
        if (!have_best || better(iter_best, best)) {
            best = iter_best;
            have_best = true;
        }
        evaporate(tau, params.rho);
        deposit(tau, m, iter_best.genes, params.q / (1.0 + iter_best.fitness));
        clamp_all(tau, params.tau_min, params.tau_max);
        if (observer) observer(it, tau);
        history.push_back(best.fitness);
    }
    return finish(ev, best, std::move(history), scorer.count());
}

// ---------------------------------------------------------------------------
// SA

bool sa_accept(double delta, double temperature, Rng& rng) {
    if (delta < 0.0) return true;
    return uniform01(rng) < std::exp(-delta / temperature);
}

ScheduleResult sa_schedule(const WorkloadSet& w, const SaParams& params, std::uint64_t seed) {
    require_instance(w);
    const ScheduleEvaluator ev(w);
    return sa_schedule(w, params, seed, Objective::anchored_qos(ev));
}

ScheduleResult sa_schedule(const WorkloadSet& w, const SaParams& params, std::uint64_t seed,
                           const Objective& objective) {
    require_instance(w);
    params.validate();
    const ScheduleEvaluator ev(w);
    Scorer scorer(ev, objective);
    Rng rng(seed);
    const std::size_t n = ev.task_count();
    const std::size_t m = ev.vm_count();

    std::vector<std::size_t> genes(n);
    if (params.neighborhood == SaNeighborhood::swap) {
        for (std::size_t i = 0; i < n; ++i) genes[i] = i % m;
    } else {
        genes = random_genes(n, m, rng);
    }
    Candidate current = scorer.score(genes);
    Candidate best = current;
    std::vector<double> history;
    const bool can_swap = std::any_of(genes.begin(), genes.end(), [&](std::size_t g) { return g != genes[0]; });
    const bool use_swap = params.neighborhood == SaNeighborhood::swap;
    if (m == 1 || (use_swap && !can_swap)) {
        history.push_back(best.fitness);
        return finish(ev, best, std::move(history), scorer.count());
    }
    for (double temp = params.initial_temp; temp >= params.min_temp; temp *= params.cooling_rate) {
        for (std::size_t s = 0; s < params.steps_per_temp; ++s) {
            const std::size_t i = uniform_index(rng, n);
            std::size_t k = i;
            const std::size_t old_vm = genes[i];
            if (use_swap) {
                do {
                    k = uniform_index(rng, n);
                } while (genes[k] == genes[i]);
                std::swap(genes[i], genes[k]);
            } else {
                std::size_t new_vm = uniform_index(rng, m - 1);
                if (new_vm >= old_vm) ++new_vm;
                genes[i] = new_vm;
            }
            Candidate next = scorer.score(genes);
            if (sa_accept(next.fitness - current.fitness, temp, rng)) {
                current = std::move(next);
                if (better(current, best)) best = current;
            } else if (use_swap) {
                std::swap(genes[i], genes[k]);
            } else {
                genes[i] = old_vm;
            }
        }
        history.push_back(best.fitness);
    }
    return finish(ev, best, std::move(history), scorer.count());
}

// ---------------------------------------------------------------------------
// GAACO

Objective gaaco_objective(const ScheduleEvaluator& ev, const metrics::QosWeights& weights, const GaacoParams& params) {
    return Objective::anchored_qos(ev, weights).with_balance(params.balance_weight);
}

ScheduleResult gaaco_schedule(const WorkloadSet& w, const GaacoParams& params, std::uint64_t seed) {
    require_instance(w);
    const ScheduleEvaluator ev(w);
    return gaaco_schedule(w, params, seed, gaaco_objective(ev, {}, params));
}

ScheduleResult gaaco_schedule(const WorkloadSet& w, const GaacoParams& params, std::uint64_t seed,
                              const Objective& objective) {
    require_instance(w);
    params.validate();
    const ScheduleEvaluator ev(w);
    Scorer scorer(ev, objective);
    Rng rng(seed);
    const std::size_t n = ev.task_count();
    const std::size_t m = ev.vm_count();
    const std::size_t pop_size = params.population;

    // Trail bounds follow the max-min convention: the ceiling is the steady state
    // of a full-intensity deposit under maximum evaporation.
    const double tau_hi = params.q / params.rho_max;
    const double tau_lo = tau_hi * 0.01;
    std::vector<double> tau(n * m, tau_hi);

    std::vector<Candidate> pop;
    pop.reserve(pop_size);
    for (std::size_t k = 0; k < pop_size; ++k) pop.push_back(scorer.score(random_genes(n, m, rng)));
    std::sort(pop.begin(), pop.end(), better);
    Candidate best = pop.front();

    auto tournament = [&]() -> const Candidate& {
        const Candidate& a = pop[uniform_index(rng, pop.size())];
        const Candidate& b = pop[uniform_index(rng, pop.size())];
        return better(a, b) ? a : b;
    };
    auto mutate = [&](std::vector<std::size_t>& g, double pm) {
        if (m < 2) return;
        for (auto& gene : g) {
            if (uniform01(rng) < pm) {
                std::size_t v = uniform_index(rng, m - 1);
                gene = v >= gene ? v + 1 : v;
            }
        }
    };

    std::vector<double> history;
    history.reserve(params.evolution_num);
    std::vector<std::size_t> refined;  // last elite already at a local optimum
    const double span = params.evolution_num > 1 ? static_cast<double>(params.evolution_num - 1) : 1.0;
    for (std::size_t gen = 0; gen < params.evolution_num; ++gen) {
        const double progress = params.evolution_num > 1 ? static_cast<double>(gen) / span : 1.0;
        const double pm = params.pm * (1.0 - 0.75 * progress);
        const double alpha = params.alpha_max * (0.5 + 0.5 * progress);
        const double beta = params.beta_max * (1.0 - 0.5 * progress);
        const double rho = params.rho_max * (1.0 - 0.5 * progress);

        // Genetic phase: elitist generational replacement.
        std::vector<Candidate> next;
        next.reserve(pop_size + params.ants);
        next.push_back(pop.front());
        while (next.size() < pop_size) {
            std::vector<std::size_t> c1 = tournament().genes;
            std::vector<std::size_t> c2 = tournament().genes;
            if (n > 1 && uniform01(rng) < params.pc) {
                const std::size_t cut = 1 + uniform_index(rng, n - 1);
                std::swap_ranges(c1.begin() + static_cast<std::ptrdiff_t>(cut), c1.end(),
                                 c2.begin() + static_cast<std::ptrdiff_t>(cut));
            }
            mutate(c1, pm);
            mutate(c2, pm);
            next.push_back(scorer.score(std::move(c1)));
            if (next.size() < pop_size) next.push_back(scorer.score(std::move(c2)));
        }
        std::sort(next.begin(), next.end(), better);

        // GA elite lays pheromone, rank-weighted.
        evaporate(tau, rho);
        const std::size_t elite = std::max<std::size_t>(1, pop_size / 5);
        for (std::size_t r = 0; r < elite && r < next.size(); ++r) {
            deposit(tau, m, next[r].genes, params.q / (static_cast<double>(r + 1) * (1.0 + next[r].fitness)));
        }
        clamp_all(tau, tau_lo, tau_hi);

        // Ant phase.
        Candidate ant_best;
        for (std::size_t a = 0; a < params.ants; ++a) {
            Candidate c = scorer.score(construct(ev, tau, alpha, beta, rng));
            if (a == 0 || better(c, ant_best)) ant_best = c;
            next.push_back(std::move(c));
        }
        deposit(tau, m, ant_best.genes, params.q / (1.0 + ant_best.fitness));
        clamp_all(tau, tau_lo, tau_hi);

        // Survivors: best distinct chromosomes from GA offspring and ant walks.
        std::sort(next.begin(), next.end(), better);
        pop.clear();
        for (auto& c : next) {
            if (pop.size() == pop_size) break;
            if (!pop.empty() && pop.back().genes == c.genes) continue;
            pop.push_back(std::move(c));
        }
        if (params.refine_sweeps > 0 && pop.front().genes != refined) {
            pop.front() = refine(scorer, std::move(pop.front()), m, params.refine_sweeps);
            refined = pop.front().genes;
        }
        if (better(pop.front(), best)) best = pop.front();
        history.push_back(best.fitness);
    }
    return finish(ev, best, std::move(history), scorer.count());
}

// ---------------------------------------------------------------------------
// EFT and brute force

ScheduleResult eft_schedule(const WorkloadSet& w) {
    require_instance(w);
    const ScheduleEvaluator ev(w);
    const PrecedenceIndex prec(w.tasks, w.edges);
    const std::size_t m = ev.vm_count();
    std::vector<double> free_at(m, 0.0);
    std::vector<double> finish_at(ev.task_count(), 0.0);
    std::vector<std::size_t> genes(ev.task_count(), 0);
    for (std::size_t i : ev.order()) {
        double ready = w.tasks[i].arrival;
        for (std::size_t p : prec.predecessors[i]) ready = std::max(ready, finish_at[p]);
        std::size_t pick = 0;
        double best_ct = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            const double ct = std::max(ready, free_at[j]) + ev.duration(i, j);
            if (ct < best_ct) {
                best_ct = ct;
                pick = j;
            }
        }
        genes[i] = pick;
        free_at[pick] = best_ct;
        finish_at[i] = best_ct;
    }
    const Objective objective = Objective::anchored_qos(ev);
    Candidate c;
    c.eval = ev.evaluate(genes);
    c.fitness = objective(c.eval);
    c.genes = std::move(genes);
    return finish(ev, c, {c.fitness}, 1);
}

ScheduleResult brute_force_schedule(const WorkloadSet& w, const Objective& objective) {
    require_instance(w);
    const ScheduleEvaluator ev(w);
    const std::size_t n = ev.task_count();
    const std::size_t m = ev.vm_count();
    constexpr double kLimit = 1e6;
    if (static_cast<double>(n) * std::log(static_cast<double>(m)) > std::log(kLimit) + 1e-12) {
        throw SizeError("exhaustive search over " + std::to_string(m) + "^" + std::to_string(n) +
                        " assignments exceeds 10^6");
    }
    Scorer scorer(ev, objective);
    std::vector<std::size_t> genes(n, 0);
    Candidate best = scorer.score(genes);
    for (;;) {
        // Odometer increment; task 0 is the most significant digit, so visiting
        // order is lexicographic and the first optimum found is kept.
        std::size_t k = n;
        while (k > 0) {
            --k;
            if (++genes[k] < m) break;
            genes[k] = 0;
            if (k == 0) {
                k = n + 1;
                break;
            }
        }
        if (k == n + 1) break;
        Candidate c = scorer.score(genes);
        if (c.fitness < best.fitness) best = std::move(c);
    }
    return finish(ev, best, {best.fitness}, scorer.count());
}

}  // namespace cloudsched::sched
