#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "cloudsched/workload.hpp"

namespace cloudsched::cluster {

/// Classic dynamic-time-warping cost with |x - y| local cost and
/// match / insert / delete steps. Throws PreconditionError on an empty series.
double dtw_distance(std::span<const double> a, std::span<const double> b);

/// Symmetric n x n DTW matrix, row-major.
std::vector<double> dtw_matrix(std::span<const std::vector<double>> series);

struct ProfileFeatures {
    std::vector<double> ar;    ///< least-squares AR(p) coefficients, lag 1 first
    double ar_residual = 0.0;  ///< mean squared one-step residual of the AR fit
    double slope = 0.0;        ///< OLS linear trend over slot index
    double intercept = 0.0;
    double mean = 0.0;
    std::size_t peak_slot = 0;  ///< first argmax
    std::size_t length = 0;

    /// AR coefficients, slope, intercept, mean, and peak position as a fraction of length.
    std::vector<double> to_vector() const;
};

/// Requires series length > ar_order + 1.
ProfileFeatures extract_features(std::span<const double> series, std::size_t ar_order);
ProfileFeatures extract_features(const UsageProfile& profile, std::size_t ar_order);

enum class ClusterDistance { dtw, euclidean_features };

std::string_view to_string(ClusterDistance d);
ClusterDistance parse_cluster_distance(std::string_view name);

struct ClusterOptions {
    std::size_t max_iterations = 100;
    std::size_t ar_order = 2;  ///< for euclidean_features
};

struct ClusterModel {
    std::size_t k = 0;
    std::map<UserId, std::size_t> assignments;  ///< user -> cluster
    /// Representative series per cluster: the medoid under DTW, the slotwise
    /// member mean under feature distance.
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;  ///< DTW cost to medoids, or squared feature distance to means
    std::vector<double> inertia_history;  ///< after the first assignment and after every update
    std::size_t iterations = 0;
};

/// Seeded k-means++ initialization followed by assign/update rounds until the
/// assignment is stable. Under DTW the update picks medoids. User ids must be
/// unique across `profiles`.
ClusterModel kmeans_cluster(std::span<const UsageProfile> profiles, std::size_t k, ClusterDistance distance,
                            std::uint64_t seed, const ClusterOptions& options = {});

/// Final inertia for k = 1..k_max (capped at the profile count).
std::vector<double> inertia_elbow(std::span<const UsageProfile> profiles, std::size_t k_max,
                                  ClusterDistance distance, std::uint64_t seed, const ClusterOptions& options = {});

/// Profiles of a single resource kind, one per user.
std::vector<UsageProfile> profiles_of_kind(std::span<const UsageProfile> profiles, ResourceKind kind);

inline constexpr const char* kClusterCsvHeader = "user_id,cluster_id";
inline constexpr const char* kCentroidCsvHeader = "cluster_id,slot,value";

void write_cluster_csv(std::ostream& out, const ClusterModel& model);
void write_centroid_csv(std::ostream& out, const ClusterModel& model);

}  // namespace cloudsched::cluster
