#pragma once

// Geometry of the manifold S+(2, m) of m x m rank-2 PSD matrices, handled
// entirely through m x 2 factors F with G = F F^T. Two factors represent the
// same point when they differ by a right rotation F -> F Q, Q in SO(2).

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>

namespace gramtraj {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using FactorMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// One manifold point: stacked centered positions (top n rows) and
/// velocities (bottom n rows) of a landmark region.
class FeatureFactor {
public:
    FeatureFactor() = default;
    explicit FeatureFactor(FactorMatrix data);

    const FactorMatrix& matrix() const { return data_; }
    Eigen::Index rows() const { return data_.rows(); }
    double squared_norm() const { return data_.squaredNorm(); }

private:
    FactorMatrix data_;
};

/// Horizontal representative of a tangent vector at `base`.
struct TangentVector {
    FactorMatrix direction;
    FeatureFactor base;
};

struct Rotation2 {
    double angle = 0.0;

    Eigen::Matrix2d matrix() const;
    static Rotation2 identity() { return {}; }
};

/// Rotation Q minimising ||F_a Q - F_b||_F. With F_a^T F_b = [[a, b], [c, d]]
/// the optimum is atan2(c - b, a + d). Returns the identity when a + d and
/// c - b are both zero (every angle is optimal).
Rotation2 optimal_rotation(const FeatureFactor& a, const FeatureFactor& b);

/// ||F_a||^2 + ||F_b||^2 - 2 sqrt((a + d)^2 + (c - b)^2), clamped at zero.
double distance_squared(const FeatureFactor& a, const FeatureFactor& b);

double distance(const FeatureFactor& a, const FeatureFactor& b);

/// F_target Q* - F_base, Q* aligning target onto base; its norm is distance().
TangentVector log_map(const FeatureFactor& base, const FeatureFactor& target);

/// F_base + t V (first-order retraction along the horizontal lift).
FeatureFactor exp_map(const FeatureFactor& base, const TangentVector& v, double t);

/// Point at fraction w in [0, 1] of the way from p to q.
FeatureFactor weighted_mean(const FeatureFactor& p, const FeatureFactor& q, double w);

/// Distance on a product of manifolds from per-factor squared distances.
double product_distance(std::span<const double> per_region_squared);

}  // namespace gramtraj
