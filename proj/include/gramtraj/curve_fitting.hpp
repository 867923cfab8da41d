#pragma once

#include "gramtraj/trajectory.hpp"

#include <array>
#include <optional>

namespace gramtraj {

/// Smoothing weight of the data term; std::nullopt means no fitting
/// (piecewise-geodesic interpolation of the samples).
using FittingLambda = std::optional<double>;

/// Blended cubic curve through a manifold trajectory.
///
/// Every sample d_a carries one cubic Bezier curve living in its tangent
/// space and defined over [a - 1, a + 1]. It is fitted to the lifts of
/// d_{a-1}, d_a, d_{a+1} (indices clamped at the ends) by minimising
///
///     lambda * sum_j ||c(t_j) - log_{d_a}(d_j)||^2 + int ||c''(t)||^2 dt.
///
/// On [i, i + 1] the curve blends exp_{d_i}(c_i(t)) and exp_{d_{i+1}}(c_{i+1}(t))
/// with weight s = t - i, so neighbouring segments meet at exp_{d_i}(c_i(i)).
class FittedCurve {
public:
    using ControlPolygon = std::array<FactorMatrix, 4>;

    FittedCurve(Trajectory source, FittingLambda lambda, std::vector<ControlPolygon> controls);

    const Trajectory& source() const { return source_; }
    const FittingLambda& lambda() const { return lambda_; }
    const std::vector<ControlPolygon>& controls() const { return controls_; }
    /// tau: the curve is defined on [0, tau].
    double domain_end() const { return static_cast<double>(source_.size() - 1); }

private:
    Trajectory source_;
    FittingLambda lambda_;
    std::vector<ControlPolygon> controls_;
};

FittedCurve fit(const Trajectory& trajectory, FittingLambda lambda);

FeatureFactor evaluate(const FittedCurve& curve, double t);

/// The curve sampled at t = 0, 1, ..., tau.
Trajectory resample(const FittedCurve& curve);

/// Control points as linear combinations of the three window lifts
/// (rows: control points, columns: lifts at t = a - 1, a, a + 1).
Eigen::Matrix<double, 4, 3> fitting_operator(double lambda);

/// De Casteljau evaluation of a cubic Bezier polygon at u in [0, 1].
FactorMatrix de_casteljau(const FittedCurve::ControlPolygon& polygon, double u);

}  // namespace gramtraj
