#pragma once

#include "gramtraj/trajectory.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace gramtraj {

/// Which quantity feeds the local Gaussian kernel.
enum class DistanceMode {
    squared,  // closed-form squared geodesic distance (default)
    metric,   // its square root
};

std::string to_string(DistanceMode mode);
DistanceMode parse_distance_mode(const std::string& text);

struct SimilarityMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd values;
    std::string region;
    double sigma = 0.0;

    Eigen::Index size() const { return values.rows(); }
    Eigen::Index index_of(const std::string& id) const;
};

/// D(i, j) between every point of `a` and every point of `b`.
Eigen::MatrixXd pairwise_distance_matrix(const Trajectory& a, const Trajectory& b,
                                         DistanceMode mode);

/// D for the product of several region manifolds: entrywise
/// sqrt(sum_k d_k^2) in metric mode, sum_k d_k^2 in squared mode.
/// `a` and `b` hold one trajectory per region, in the same region order.
Eigen::MatrixXd product_distance_matrix(std::span<const Trajectory> a,
                                        std::span<const Trajectory> b, DistanceMode mode);

/// k = k~ / (1 - k~), k~ = exp(-D / sigma^2) / 2.
double local_kernel(double d, double sigma);
double log_local_kernel(double d, double sigma);

/// Global alignment score over an (n1 + 1) x (n2 + 1) table, M(0, 0) = 1,
/// M(i, j) = (M(i, j-1) + M(i-1, j-1) + M(i-1, j)) * k(i, j); returns
/// log M(n1, n2). `log_k(i, j)` is queried with 0-based indices.
double log_global_alignment(Eigen::Index n1, Eigen::Index n2,
                            const std::function<double(Eigen::Index, Eigen::Index)>& log_k);

double log_gak_from_distances(const Eigen::MatrixXd& d, double sigma);

double log_gak_similarity(const Trajectory& a, const Trajectory& b, double sigma,
                          DistanceMode mode = DistanceMode::squared);
double gak_similarity(const Trajectory& a, const Trajectory& b, double sigma,
                      DistanceMode mode = DistanceMode::squared);

struct KernelOptions {
    double sigma = 0.7;
    DistanceMode mode = DistanceMode::squared;
    bool normalize = true;
    /// Eigenvalue check of the finished kernel (O(n^3)).
    bool validate_psd = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Symmetric matrix of log similarities; only i <= j pairs are computed.
/// `log_similarity(i, j)` must be computable from any worker thread.
Eigen::MatrixXd build_log_similarity(std::size_t count,
                                     const std::function<double(std::size_t, std::size_t)>& log_similarity,
                                     unsigned threads);

/// Kernel of one region over trajectories that all share that region.
SimilarityMatrix build_similarity_matrix(const std::vector<Trajectory>& trajectories,
                                         const KernelOptions& options);

/// Kernel of the product manifold; trajectories[s] holds sequence s's
/// per-region trajectories.
SimilarityMatrix build_product_similarity_matrix(
    const std::vector<std::vector<Trajectory>>& trajectories, const KernelOptions& options);

/// Turns a log-similarity matrix into the final kernel, normalising in the
/// log domain when requested.
Eigen::MatrixXd finalize_kernel(const Eigen::MatrixXd& log_values, bool normalize);

/// K(i, j) / sqrt(K(i, i) K(j, j)).
SimilarityMatrix normalize_kernel(const SimilarityMatrix& k);

double min_eigenvalue_ratio(const Eigen::MatrixXd& k);

/// Throws unless min eigenvalue >= -tolerance * max eigenvalue.
void check_psd(const Eigen::MatrixXd& k, double tolerance, const std::string& what);

}  // namespace gramtraj
