#include "gramtraj/geometry.hpp"

#include <cmath>
#include <numeric>

namespace gramtraj {

namespace {

void require_same_shape(const FeatureFactor& a, const FeatureFactor& b, const char* op) {
    if (a.rows() != b.rows()) {
        throw Error(std::string(op) + ": factor row mismatch (" + std::to_string(a.rows()) +
                    " vs " + std::to_string(b.rows()) + ")");
    }
}

struct CrossTerms {
    double cos_coeff;  // a + d
    double sin_coeff;  // c - b
};

CrossTerms cross_terms(const FeatureFactor& a, const FeatureFactor& b) {
    const Eigen::Matrix2d m = a.matrix().transpose() * b.matrix();
    return {m(0, 0) + m(1, 1), m(1, 0) - m(0, 1)};
}

}  // namespace

FeatureFactor::FeatureFactor(FactorMatrix data) : data_(std::move(data)) {
    if (data_.rows() < 2) {
        throw Error("FeatureFactor: need at least 2 rows, got " + std::to_string(data_.rows()));
    }
    if (!data_.allFinite()) {
        throw Error("FeatureFactor: non-finite entry");
    }
}

Eigen::Matrix2d Rotation2::matrix() const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix2d q;
    q << c, -s, s, c;
    return q;
}

Rotation2 optimal_rotation(const FeatureFactor& a, const FeatureFactor& b) {
    require_same_shape(a, b, "optimal_rotation");
    const auto [cos_coeff, sin_coeff] = cross_terms(a, b);
    if (cos_coeff == 0.0 && sin_coeff == 0.0) {
        return Rotation2::identity();
    }
    return Rotation2{std::atan2(sin_coeff, cos_coeff)};
}

double distance_squared(const FeatureFactor& a, const FeatureFactor& b) {
    require_same_shape(a, b, "distance_squared");
    // ||a||^2 + ||b||^2 - 2 hypot(a + d, c - b) in exact arithmetic; the
    // residual at the optimal rotation avoids cancellation for close points.
    const auto [cos_coeff, sin_coeff] = cross_terms(a, b);
    const double h = std::hypot(cos_coeff, sin_coeff);
    if (h == 0.0) return a.squared_norm() + b.squared_norm();
    const double c = cos_coeff / h, s = sin_coeff / h;
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double x = a.matrix()(i, 0) * c + a.matrix()(i, 1) * s - b.matrix()(i, 0);
        const double y = -a.matrix()(i, 0) * s + a.matrix()(i, 1) * c - b.matrix()(i, 1);
        d2 += x * x + y * y;
    }
    return d2;
}

double distance(const FeatureFactor& a, const FeatureFactor& b) {
    return std::sqrt(distance_squared(a, b));
}

TangentVector log_map(const FeatureFactor& base, const FeatureFactor& target) {
    require_same_shape(base, target, "log_map");
    const Eigen::Matrix2d q = optimal_rotation(target, base).matrix();
    return {target.matrix() * q - base.matrix(), base};
}

FeatureFactor exp_map(const FeatureFactor& base, const TangentVector& v, double t) {
    if (v.direction.rows() != base.rows()) {
        throw Error("exp_map: tangent vector shape does not match base");
    }
    return FeatureFactor(base.matrix() + t * v.direction);
}

FeatureFactor weighted_mean(const FeatureFactor& p, const FeatureFactor& q, double w) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw Error("weighted_mean: weight must lie in [0, 1], got " + std::to_string(w));
    }
    if (w == 0.0) {
        require_same_shape(p, q, "weighted_mean");
        return p;
    }
    return exp_map(p, log_map(p, q), w);
}

double product_distance(std::span<const double> per_region_squared) {
    if (per_region_squared.empty()) {
        throw Error("product_distance: no region distances");
    }
    double sum = 0.0;
    for (double d2 : per_region_squared) {
        if (!(d2 >= 0.0)) {
            throw Error("product_distance: negative or NaN squared distance");
        }
        sum += d2;
    }
    return std::sqrt(sum);
}

}  // namespace gramtraj
