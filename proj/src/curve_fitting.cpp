#include "gramtraj/curve_fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace gramtraj {

namespace {

double bernstein(int k, double u) {
    const double v = 1.0 - u;
    switch (k) {
        case 0: return v * v * v;
        case 1: return 3.0 * u * v * v;
        case 2: return 3.0 * u * u * v;
        default: return u * u * u;
    }
}

// int_{a-1}^{a+1} ||c''(t)||^2 dt for a cubic Bezier on u = (t - a + 1) / 2.
// With A = b0 - 2 b1 + b2 and B = b1 - 2 b2 + b3, c_uu = 6 ((1 - u) A + u B),
// int_0^1 ||c_uu||^2 du = 12 (|A|^2 + <A, B> + |B|^2) and the change of
// variable contributes a factor 1/8.
Eigen::Matrix4d acceleration_form() {
    Eigen::Matrix<double, 2, 4> second_diff;
    second_diff << 1, -2, 1, 0, 0, 1, -2, 1;
    Eigen::Matrix2d mix;
    mix << 1.0, 0.5, 0.5, 1.0;
    return 1.5 * second_diff.transpose() * mix * second_diff;
}

}  // namespace

FittedCurve::FittedCurve(Trajectory source, FittingLambda lambda,
                         std::vector<ControlPolygon> controls)
    : source_(std::move(source)), lambda_(lambda), controls_(std::move(controls)) {}

Eigen::Matrix<double, 4, 3> fitting_operator(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error("fit: lambda must be positive and finite, got " + std::to_string(lambda));
    }
    Eigen::Matrix<double, 3, 4> basis;
    constexpr std::array<double, 3> window_u{0.0, 0.5, 1.0};
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 4; ++k) basis(j, k) = bernstein(k, window_u[j]);
    }
    const Eigen::Matrix4d normal = lambda * basis.transpose() * basis + acceleration_form();
    return normal.ldlt().solve(lambda * basis.transpose());
}

FactorMatrix de_casteljau(const FittedCurve::ControlPolygon& polygon, double u) {
    std::array<FactorMatrix, 4> work = polygon;
    for (int level = 3; level > 0; --level) {
        for (int k = 0; k < level; ++k) {
            work[k] = (1.0 - u) * work[k] + u * work[k + 1];
        }
    }
    return work[0];
}

FittedCurve fit(const Trajectory& trajectory, FittingLambda lambda) {
    const auto n = trajectory.size();
    if (n < 2) {
        throw Error("fit: trajectory " + trajectory.sequence_id + "/" + trajectory.region +
                    " has fewer than 2 points");
    }
    if (!lambda) {
        return FittedCurve(trajectory, lambda, {});
    }
    const auto op = fitting_operator(*lambda);

    std::vector<FittedCurve::ControlPolygon> controls;
    controls.reserve(n);
    const auto last = static_cast<long>(n) - 1;
    for (long a = 0; a <= last; ++a) {
        const auto& anchor = trajectory.points[static_cast<std::size_t>(a)];
        std::array<FactorMatrix, 3> lifts;
        for (int j = 0; j < 3; ++j) {
            const long idx = std::clamp(a - 1 + j, 0L, last);
            if (idx == a) {
                lifts[j] = FactorMatrix::Zero(anchor.rows(), 2);
            } else {
                lifts[j] = log_map(anchor, trajectory.points[static_cast<std::size_t>(idx)]).direction;
            }
        }
        FittedCurve::ControlPolygon polygon;
        for (int k = 0; k < 4; ++k) {
            polygon[k] = op(k, 0) * lifts[0] + op(k, 1) * lifts[1] + op(k, 2) * lifts[2];
        }
        controls.push_back(std::move(polygon));
    }
    return FittedCurve(trajectory, lambda, std::move(controls));
}

FeatureFactor evaluate(const FittedCurve& curve, double t) {
    const double tau = curve.domain_end();
    if (!(t >= 0.0 && t <= tau)) {
        throw Error("evaluate: t = " + std::to_string(t) + " outside [0, " + std::to_string(tau) +
                    "]");
    }
    const auto& points = curve.source().points;
    const auto segment = std::min(static_cast<std::size_t>(std::floor(t)), points.size() - 2);
    const double s = t - static_cast<double>(segment);

    if (!curve.lambda()) {
        return weighted_mean(points[segment], points[segment + 1], s);
    }
    const auto& left_anchor = points[segment];
    const auto& right_anchor = points[segment + 1];
    // Left curve spans [i - 1, i + 1], right curve [i, i + 2].
    const FeatureFactor left(left_anchor.matrix() +
                             de_casteljau(curve.controls()[segment], 0.5 * (s + 1.0)));
    const FeatureFactor right(right_anchor.matrix() +
                              de_casteljau(curve.controls()[segment + 1], 0.5 * s));
    return weighted_mean(left, right, s);
}

Trajectory resample(const FittedCurve& curve) {
    Trajectory out = curve.source();
    if (!curve.lambda()) return out;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        out.points[i] = evaluate(curve, static_cast<double>(i));
    }
    return out;
}

}  // namespace gramtraj
