#include "gramtraj/alignment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace gramtraj {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_sum_exp3(double x, double y, double z) {
    const double m = std::max({x, y, z});
    if (m == neg_inf) return neg_inf;
    return m + std::log(std::exp(x - m) + std::exp(y - m) + std::exp(z - m));
}

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error("local_kernel: sigma must be positive, got " + std::to_string(sigma));
    }
}

double region_distance(const FeatureFactor& a, const FeatureFactor& b, DistanceMode mode) {
    return mode == DistanceMode::squared ? distance_squared(a, b) : distance(a, b);
}

void require_compatible(const Trajectory& a, const Trajectory& b) {
    if (a.points.empty() || b.points.empty()) {
        throw Error("alignment: empty trajectory (" + a.sequence_id + ", " + b.sequence_id + ")");
    }
    if (a.region != b.region || a.points.front().rows() != b.points.front().rows()) {
        throw Error("alignment: trajectories " + a.sequence_id + "/" + a.region + " and " +
                    b.sequence_id + "/" + b.region + " are not on the same region manifold");
    }
}

unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::string to_string(DistanceMode mode) {
    return mode == DistanceMode::squared ? "squared" : "metric";
}

DistanceMode parse_distance_mode(const std::string& text) {
    if (text == "squared") return DistanceMode::squared;
    if (text == "metric") return DistanceMode::metric;
    throw Error("unknown distance mode '" + text + "' (expected squared|metric)");
}

Eigen::Index SimilarityMatrix::index_of(const std::string& id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) {
        throw Error("similarity matrix (" + region + "): unknown sequence id '" + id + "'");
    }
    return static_cast<Eigen::Index>(it - ids.begin());
}

Eigen::MatrixXd pairwise_distance_matrix(const Trajectory& a, const Trajectory& b,
                                         DistanceMode mode) {
    require_compatible(a, b);
    Eigen::MatrixXd d(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                region_distance(a.points[i], b.points[j], mode);
        }
    }
    return d;
}

Eigen::MatrixXd product_distance_matrix(std::span<const Trajectory> a,
                                        std::span<const Trajectory> b, DistanceMode mode) {
    if (a.empty() || a.size() != b.size()) {
        throw Error("product_distance_matrix: region count mismatch");
    }
    Eigen::MatrixXd sum;
    for (std::size_t r = 0; r < a.size(); ++r) {
        require_compatible(a[r], b[r]);
        if (a[r].size() != a[0].size() || b[r].size() != b[0].size()) {
            throw Error("product_distance_matrix: region trajectories differ in length");
        }
        const Eigen::MatrixXd d2 = pairwise_distance_matrix(a[r], b[r], DistanceMode::squared);
        if (r == 0) {
            sum = d2;
        } else {
            sum += d2;
        }
    }
    if (mode == DistanceMode::squared) return sum;
    return sum.cwiseSqrt();
}

double log_local_kernel(double d, double sigma) {
    require_sigma(sigma);
    if (!(d >= 0.0)) {
        throw Error("local_kernel: distance must be non-negative");
    }
    const double exponent = -d / (sigma * sigma);
    // log k~ - log(1 - k~), with k~ = exp(exponent) / 2
    return std::log(0.5) + exponent - std::log1p(-0.5 * std::exp(exponent));
}

double local_kernel(double d, double sigma) { return std::exp(log_local_kernel(d, sigma)); }

double log_global_alignment(Eigen::Index n1, Eigen::Index n2,
                            const std::function<double(Eigen::Index, Eigen::Index)>& log_k) {
    if (n1 < 1 || n2 < 1) {
        throw Error("global alignment: empty trajectory");
    }
    // Keep the rolling rows along the shorter side.
    const bool transpose = n2 > n1;
    const Eigen::Index outer = transpose ? n2 : n1;
    const Eigen::Index inner = transpose ? n1 : n2;

    std::vector<double> prev(static_cast<std::size_t>(inner + 1), neg_inf);
    std::vector<double> curr(static_cast<std::size_t>(inner + 1), neg_inf);
    prev[0] = 0.0;  // log M(0, 0)
    for (Eigen::Index i = 1; i <= outer; ++i) {
        curr[0] = neg_inf;
        for (Eigen::Index j = 1; j <= inner; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double lk = transpose ? log_k(j - 1, i - 1) : log_k(i - 1, j - 1);
            curr[uj] = lk + log_sum_exp3(curr[uj - 1], prev[uj - 1], prev[uj]);
        }
        std::swap(prev, curr);
        prev[0] = neg_inf;
    }
    return prev[static_cast<std::size_t>(inner)];
}

double log_gak_from_distances(const Eigen::MatrixXd& d, double sigma) {
    require_sigma(sigma);
    return log_global_alignment(d.rows(), d.cols(), [&](Eigen::Index i, Eigen::Index j) {
        return log_local_kernel(d(i, j), sigma);
    });
}

double log_gak_similarity(const Trajectory& a, const Trajectory& b, double sigma,
                          DistanceMode mode) {
    require_compatible(a, b);
    require_sigma(sigma);
    return log_global_alignment(
        static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()),
        [&](Eigen::Index i, Eigen::Index j) {
            return log_local_kernel(region_distance(a.points[static_cast<std::size_t>(i)],
                                                    b.points[static_cast<std::size_t>(j)], mode),
                                    sigma);
        });
}

double gak_similarity(const Trajectory& a, const Trajectory& b, double sigma, DistanceMode mode) {
    return std::exp(log_gak_similarity(a, b, sigma, mode));
}

Eigen::MatrixXd build_log_similarity(
    std::size_t count, const std::function<double(std::size_t, std::size_t)>& log_similarity,
    unsigned threads) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(count * (count + 1) / 2);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = i; j < count; ++j) pairs.emplace_back(i, j);
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= pairs.size() || failed.load()) return;
            const auto [i, j] = pairs[task];
            try {
                const double v = log_similarity(i, j);
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    const unsigned n_workers =
        std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(pairs.size(), 1)));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

Eigen::MatrixXd finalize_kernel(const Eigen::MatrixXd& log_values, bool normalize) {
    const Eigen::Index n = log_values.rows();
    Eigen::MatrixXd k(n, n);
    if (normalize) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(log_values(i, i))) {
                throw Error("kernel: self-similarity of entry " + std::to_string(i) +
                            " is not positive");
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                k(i, j) = std::exp(log_values(i, j) -
                                   0.5 * (log_values(i, i) + log_values(j, j)));
            }
        }
        return k;
    }
    k = log_values.array().exp().matrix();
    if (!k.allFinite()) {
        throw Error("kernel: raw similarities overflow double precision; enable normalization");
    }
    return k;
}

SimilarityMatrix build_similarity_matrix(const std::vector<Trajectory>& trajectories,
                                         const KernelOptions& options) {
    if (trajectories.empty()) {
        throw Error("build_similarity_matrix: no trajectories");
    }
    const auto& region = trajectories.front().region;
    SimilarityMatrix out;
    out.region = region;
    out.sigma = options.sigma;
    for (const auto& t : trajectories) {
        if (t.region != region) {
            throw Error("build_similarity_matrix: mixed regions '" + region + "' and '" +
                        t.region + "'");
        }
        out.ids.push_back(t.sequence_id);
    }
    const auto log_values = build_log_similarity(
        trajectories.size(),
        [&](std::size_t i, std::size_t j) {
            return log_gak_similarity(trajectories[i], trajectories[j], options.sigma,
                                      options.mode);
        },
        options.threads);
    out.values = finalize_kernel(log_values, options.normalize);
    if (options.validate_psd) check_psd(out.values, 1e-8, "kernel '" + region + "'");
    return out;
}

SimilarityMatrix build_product_similarity_matrix(
    const std::vector<std::vector<Trajectory>>& trajectories, const KernelOptions& options) {
    if (trajectories.empty()) {
        throw Error("build_product_similarity_matrix: no sequences");
    }
    SimilarityMatrix out;
    out.region = "product";
    out.sigma = options.sigma;
    for (const auto& per_region : trajectories) {
        if (per_region.empty()) throw Error("build_product_similarity_matrix: no regions");
        out.ids.push_back(per_region.front().sequence_id);
    }
    const auto log_values = build_log_similarity(
        trajectories.size(),
        [&](std::size_t i, std::size_t j) {
            return log_gak_from_distances(
                product_distance_matrix(trajectories[i], trajectories[j], options.mode),
                options.sigma);
        },
        options.threads);
    out.values = finalize_kernel(log_values, options.normalize);
    if (options.validate_psd) check_psd(out.values, 1e-8, "product kernel");
    return out;
}

SimilarityMatrix normalize_kernel(const SimilarityMatrix& k) {
    const Eigen::VectorXd diag = k.values.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag(i) > 0.0)) {
            throw Error("normalize_kernel: non-positive diagonal entry at " + std::to_string(i));
        }
    }
    SimilarityMatrix out = k;
    const Eigen::VectorXd inv_sqrt = diag.cwiseSqrt().cwiseInverse();
    out.values = inv_sqrt.asDiagonal() * k.values * inv_sqrt.asDiagonal();
    return out;
}

double min_eigenvalue_ratio(const Eigen::MatrixXd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    const double max_ev = ev.maxCoeff();
    if (!(max_ev > 0.0)) return -std::numeric_limits<double>::infinity();
    return ev.minCoeff() / max_ev;
}

void check_psd(const Eigen::MatrixXd& k, double tolerance, const std::string& what) {
    const double ratio = min_eigenvalue_ratio(k);
    if (ratio < -tolerance) {
        throw Error(what + ": not positive semi-definite (min/max eigenvalue ratio " +
                    std::to_string(ratio) + ")");
    }
}

}  // namespace gramtraj
