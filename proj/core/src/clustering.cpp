#include "cloudsched/clustering.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include "cloudsched/error.hpp"
#include "cloudsched/rng.hpp"
#include "cloudsched/trace_io.hpp"

namespace cloudsched::cluster {

double dtw_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw PreconditionError("dtw_distance needs two nonempty series");
    const std::size_t cols = b.size() + 1;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(cols, inf);
    std::vector<double> cur(cols, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j < cols; ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::vector<double> dtw_matrix(std::span<const std::vector<double>> series) {
    const std::size_t n = series.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d[i * n + j] = d[j * n + i] = dtw_distance(series[i], series[j]);
        }
    }
    return d;
}

std::vector<double> ProfileFeatures::to_vector() const {
    std::vector<double> v(ar);
    v.push_back(slope);
    v.push_back(intercept);
    v.push_back(mean);
    v.push_back(length > 0 ? static_cast<double>(peak_slot) / static_cast<double>(length) : 0.0);
    return v;
}

ProfileFeatures extract_features(std::span<const double> y, std::size_t p) {
    if (y.size() <= p + 1) {
        throw PreconditionError("series of length " + std::to_string(y.size()) + " too short for AR(" +
                                std::to_string(p) + "); minimum length is " + std::to_string(p + 2));
    }
    ProfileFeatures f;
    const std::size_t n = y.size();
    f.length = n;
    f.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    f.peak_slot = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());

    const double t_mean = static_cast<double>(n - 1) / 2.0;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double dt = static_cast<double>(t) - t_mean;
        sxy += dt * (y[t] - f.mean);
        sxx += dt * dt;
    }
    f.slope = sxy / sxx;
    f.intercept = f.mean - f.slope * t_mean;

    if (p > 0) {
        const std::size_t rows = n - p;
        Eigen::MatrixXd x(rows, p);
        Eigen::VectorXd target(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            target(static_cast<Eigen::Index>(r)) = y[r + p];
            for (std::size_t lag = 1; lag <= p; ++lag) {
                x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(lag - 1)) = y[r + p - lag];
            }
        }
        // Minimum-norm solution keeps rank-deficient (e.g. constant) series well defined.
        const Eigen::VectorXd phi = x.completeOrthogonalDecomposition().solve(target);
        f.ar.assign(phi.data(), phi.data() + phi.size());
        f.ar_residual = (x * phi - target).squaredNorm() / static_cast<double>(rows);
    }
    return f;
}

ProfileFeatures extract_features(const UsageProfile& profile, std::size_t ar_order) {
    return extract_features(profile.series, ar_order);
}

std::string_view to_string(ClusterDistance d) { return d == ClusterDistance::dtw ? "dtw" : "euclidean-features"; }

ClusterDistance parse_cluster_distance(std::string_view name) {
    if (name == "dtw") return ClusterDistance::dtw;
    if (name == "euclidean-features" || name == "euclidean") return ClusterDistance::euclidean_features;
    throw ConfigError("unknown cluster distance '" + std::string(name) + "'");
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// k-means++ seeding over an abstract point-to-point cost.
template <typename Cost>
std::vector<std::size_t> plus_plus_init(std::size_t n, std::size_t k, Rng& rng, Cost cost) {
    std::vector<std::size_t> centers{uniform_index(rng, n)};
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], cost(i, centers.back()));
            total += nearest[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double u = uniform01(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (nearest[i] <= 0.0) continue;
                if (u < nearest[i]) {
                    pick = i;
                    break;
                }
                u -= nearest[i];
            }
            if (pick == n) {
                for (std::size_t i = n; i-- > 0;) {
                    if (nearest[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (std::find(centers.begin(), centers.end(), i) == centers.end()) rest.push_back(i);
            }
            pick = rest[uniform_index(rng, rest.size())];
        }
        centers.push_back(pick);
    }
    return centers;
}

/// Nearest centre, keeping the current label on ties so rounds cannot cycle.
template <typename Cost>
bool assign(std::size_t n, std::size_t k, std::vector<std::size_t>& label, Cost cost_to) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = label[i] < k ? label[i] : 0;
        double best_cost = cost_to(i, best);
        for (std::size_t c = 0; c < k; ++c) {
            const double d = cost_to(i, c);
            if (d < best_cost) {
                best_cost = d;
                best = c;
            }
        }
        if (best != label[i]) {
            label[i] = best;
            changed = true;
        }
    }
    return changed;
}

}  // namespace

ClusterModel kmeans_cluster(std::span<const UsageProfile> profiles, std::size_t k, ClusterDistance distance,
                            std::uint64_t seed, const ClusterOptions& options) {
    const std::size_t n = profiles.size();
    if (k == 0) throw ConfigError("cluster count k must be >= 1");
    if (k > n) {
        throw PreconditionError("cluster count k=" + std::to_string(k) + " exceeds " + std::to_string(n) +
                                " profiles");
    }
    std::set<UserId> users;
    for (const auto& p : profiles) {
        if (!users.insert(p.user_id).second) {
            throw ValidationError("kmeans_cluster expects one profile per user; user " +
                                  std::to_string(p.user_id) + " repeats");
        }
    }
    std::vector<std::vector<double>> series;
    series.reserve(n);
    for (const auto& p : profiles) series.push_back(p.series);

    Rng rng(seed);
    ClusterModel model;
    model.k = k;
    std::vector<std::size_t> label(n, k);  // k marks "unassigned"

    if (distance == ClusterDistance::dtw) {
        const std::vector<double> d = dtw_matrix(series);
        auto dist = [&](std::size_t i, std::size_t j) { return d[i * n + j]; };
        std::vector<std::size_t> medoid =
            plus_plus_init(n, k, rng, [&](std::size_t i, std::size_t j) { return dist(i, j) * dist(i, j); });
        auto inertia = [&] {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += dist(i, medoid[label[i]]);
            return s;
        };
        assign(n, k, label, [&](std::size_t i, std::size_t c) { return dist(i, medoid[c]); });
        model.inertia_history.push_back(inertia());
        for (std::size_t it = 0; it < options.max_iterations; ++it) {
            ++model.iterations;
            for (std::size_t c = 0; c < k; ++c) {
                double best_cost = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (label[i] == c) best_cost += dist(i, medoid[c]);
                }
                for (std::size_t cand = 0; cand < n; ++cand) {
                    if (label[cand] != c) continue;
                    double cost = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (label[i] == c) cost += dist(i, cand);
                    }
                    if (cost < best_cost) {
                        best_cost = cost;
                        medoid[c] = cand;
                    }
                }
            }
            model.inertia_history.push_back(inertia());
            if (!assign(n, k, label, [&](std::size_t i, std::size_t c) { return dist(i, medoid[c]); })) break;
            model.inertia_history.push_back(inertia());
        }
        model.inertia = inertia();
        for (std::size_t c = 0; c < k; ++c) model.centroids.push_back(series[medoid[c]]);
    } else {
        std::vector<std::vector<double>> feat;
        feat.reserve(n);
        for (const auto& s : series) feat.push_back(extract_features(s, options.ar_order).to_vector());
        const std::vector<std::size_t> init =
            plus_plus_init(n, k, rng, [&](std::size_t i, std::size_t j) { return squared_distance(feat[i], feat[j]); });
        std::vector<std::vector<double>> centre;
        for (std::size_t c : init) centre.push_back(feat[c]);
        auto inertia = [&] {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += squared_distance(feat[i], centre[label[i]]);
            return s;
        };
        auto cost_to = [&](std::size_t i, std::size_t c) { return squared_distance(feat[i], centre[c]); };
        assign(n, k, label, cost_to);
        model.inertia_history.push_back(inertia());
        for (std::size_t it = 0; it < options.max_iterations; ++it) {
            ++model.iterations;
            for (std::size_t c = 0; c < k; ++c) {
                std::vector<double> sum(feat.front().size(), 0.0);
                std::size_t count = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (label[i] != c) continue;
                    ++count;
                    for (std::size_t f = 0; f < sum.size(); ++f) sum[f] += feat[i][f];
                }
                if (count == 0) continue;
                for (double& v : sum) v /= static_cast<double>(count);
                centre[c] = std::move(sum);
            }
            model.inertia_history.push_back(inertia());
            if (!assign(n, k, label, cost_to)) break;
            model.inertia_history.push_back(inertia());
        }
        model.inertia = inertia();
        const std::size_t len = series.front().size();
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> mean(len, 0.0);
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (label[i] != c || series[i].size() != len) continue;
                ++count;
                for (std::size_t s = 0; s < len; ++s) mean[s] += series[i][s];
            }
            if (count > 0) {
                for (double& v : mean) v /= static_cast<double>(count);
            }
            model.centroids.push_back(std::move(mean));
        }
    }
    for (std::size_t i = 0; i < n; ++i) model.assignments.emplace(profiles[i].user_id, label[i]);
    return model;
}

std::vector<double> inertia_elbow(std::span<const UsageProfile> profiles, std::size_t k_max,
                                  ClusterDistance distance, std::uint64_t seed, const ClusterOptions& options) {
    std::vector<double> out;
    for (std::size_t k = 1; k <= std::min(k_max, profiles.size()); ++k) {
        out.push_back(kmeans_cluster(profiles, k, distance, seed, options).inertia);
    }
    return out;
}

std::vector<UsageProfile> profiles_of_kind(std::span<const UsageProfile> profiles, ResourceKind kind) {
    std::vector<UsageProfile> out;
    for (const auto& p : profiles) {
        if (p.kind == kind) out.push_back(p);
    }
    return out;
}

void write_cluster_csv(std::ostream& out, const ClusterModel& model) {
    out << kClusterCsvHeader << '\n';
    for (const auto& [user, c] : model.assignments) out << user << ',' << c << '\n';
}

void write_centroid_csv(std::ostream& out, const ClusterModel& model) {
    out << kCentroidCsvHeader << '\n';
    for (std::size_t c = 0; c < model.centroids.size(); ++c) {
        for (std::size_t s = 0; s < model.centroids[c].size(); ++s) {
            out << c << ',' << s << ',' << format_number(model.centroids[c][s]) << '\n';
        }
    }
}

}  // namespace cloudsched::cluster
