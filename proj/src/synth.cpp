#include "gramtraj/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gramtraj {

namespace {

void put(LandmarkFrame& z, int i, double x, double y) {
    z(i, 0) = x;
    z(i, 1) = y;
}

void ellipse(LandmarkFrame& z, int first, int count, double cx, double cy, double rx, double ry) {
    for (int k = 0; k < count; ++k) {
        const double a = std::numbers::pi - 2.0 * std::numbers::pi * k / count;
        put(z, first + k, cx + rx * std::cos(a), cy + ry * std::sin(a));
    }
}

/// Displacement of every landmark for unit activation of each region.
struct DeformationBasis {
    LandmarkFrame jaw, nose, mouth, eyes;
};

DeformationBasis deformation_basis(const LandmarkFrame& neutral) {
    const auto n = static_cast<int>(neutral.rows());
    DeformationBasis b{LandmarkFrame::Zero(n, 2), LandmarkFrame::Zero(n, 2),
                       LandmarkFrame::Zero(n, 2), LandmarkFrame::Zero(n, 2)};
    // Jaw drop: lower contour moves down in proportion to its depth.
    for (int i = 0; i <= 16; ++i) {
        const double depth = std::max(0.0, -neutral(i, 1));
        b.jaw(i, 1) = -0.2 * depth;
    }
    // Nose wrinkle: the nose rises, nostrils widen.
    for (int i = 27; i <= 35; ++i) b.nose(i, 1) = 0.05;
    b.nose(31, 0) = -0.05;
    b.nose(35, 0) = 0.05;
    // Mouth opening: lower lip down, upper lip slightly up, corners stretch.
    const double mouth_y = neutral.middleRows(48, n - 48).col(1).mean();
    for (int i = 48; i < n; ++i) {
        const double dy = neutral(i, 1) - mouth_y;
        b.mouth(i, 1) = dy < 0 ? -0.22 : 0.06;
        b.mouth(i, 0) = 0.12 * neutral(i, 0);
    }
    b.mouth(48, 0) = -0.08;
    b.mouth(54, 0) = 0.08;
    // Eye closing with brow lowering.
    for (int e = 0; e < 2; ++e) {
        const int first = 36 + 6 * e;
        const double cy = neutral.middleRows(first, 6).col(1).mean();
        for (int i = first; i < first + 6; ++i) b.eyes(i, 1) = -0.8 * (neutral(i, 1) - cy);
    }
    for (int i = 17; i <= 26; ++i) {
        b.eyes(i, 1) = -0.08;
        b.eyes(i, 0) = neutral(i, 0) < 0 ? 0.03 : -0.03;
    }
    return b;
}

}  // namespace

LandmarkFrame face_template(int landmark_count) {
    if (landmark_count != 68 && landmark_count != 66) {
        throw Error("face_template: landmark count must be 66 or 68, got " +
                    std::to_string(landmark_count));
    }
    LandmarkFrame z(landmark_count, 2);
    for (int k = 0; k <= 16; ++k) {
        const double a = std::numbers::pi * (1.0 - k / 16.0);
        put(z, k, std::cos(a), -1.2 * std::sin(a) + 0.1);
    }
    for (int k = 0; k < 5; ++k) {
        const double x = 0.2 + 0.15 * k;
        const double y = 0.55 + 0.08 * std::sin(std::numbers::pi * k / 4.0);
        put(z, 17 + k, -(0.8 - 0.15 * k), 0.55 + 0.08 * std::sin(std::numbers::pi * k / 4.0));
        put(z, 22 + k, x, y);
    }
    for (int k = 0; k < 4; ++k) put(z, 27 + k, 0.0, 0.4 - 0.15 * k);
    for (int k = 0; k < 5; ++k) put(z, 31 + k, -0.2 + 0.1 * k, k == 2 ? -0.2 : -0.15);
    ellipse(z, 36, 6, -0.45, 0.3, 0.15, 0.06);
    ellipse(z, 42, 6, 0.45, 0.3, 0.15, 0.06);
    ellipse(z, 48, 12, 0.0, -0.55, 0.35, 0.12);
    ellipse(z, 60, landmark_count - 60, 0.0, -0.55, 0.22, 0.05);
    return z;
}

Dataset synthesize(const SynthParameters& p, unsigned long long seed) {
    if (p.subjects < 1 || p.sequences_per_subject < 1 || p.levels < 1) {
        throw Error("synthesize: subjects, sequences_per_subject and levels must be positive");
    }
    if (p.min_frames < 2 || p.max_frames < p.min_frames) {
        throw Error("synthesize: need 2 <= min_frames <= max_frames");
    }
    if (!(p.noise >= 0.0)) throw Error("synthesize: noise must be non-negative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto uniform = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    constexpr double two_pi = 2.0 * std::numbers::pi;

    const LandmarkFrame base = face_template(p.landmarks);
    const auto n = base.rows();
    Dataset out;
    out.reserve(static_cast<std::size_t>(p.subjects * p.sequences_per_subject));

    for (int s = 0; s < p.subjects; ++s) {
        char sid[32];
        std::snprintf(sid, sizeof sid, "S%03d", s + 1);

        LandmarkFrame neutral = base;
        for (Eigen::Index i = 0; i < n; ++i) {
            neutral(i, 0) += 0.02 * gauss(rng);
            neutral(i, 1) += 0.02 * gauss(rng);
        }
        neutral.col(0) *= uniform(0.92, 1.08);
        const DeformationBasis basis = deformation_basis(neutral);
        const double face_scale = uniform(80.0, 120.0);  // pixels per half-width
        const double yaw = uniform(-0.08, 0.08);
        const double expressiveness = uniform(0.85, 1.15);

        std::vector<int> labels(static_cast<std::size_t>(p.sequences_per_subject));
        for (int j = 0; j < p.sequences_per_subject; ++j) labels[j] = j % p.levels;
        std::shuffle(labels.begin(), labels.end(), rng);

        for (int j = 0; j < p.sequences_per_subject; ++j) {
            const int label = labels[j];
            const double q = p.levels > 1 ? static_cast<double>(label) / (p.levels - 1) : 0.0;
            const int frames = std::uniform_int_distribution<int>(p.min_frames, p.max_frames)(rng);
            const double amplitude = expressiveness * (0.1 + 0.9 * q) * uniform(0.9, 1.1);
            const double cycles = (1.0 + 1.5 * q) * uniform(0.9, 1.1);
            std::array<double, 4> phase{};
            std::array<double, 4> gain{};
            for (int r = 0; r < 4; ++r) {
                phase[r] = uniform(-0.3, 0.3);
                gain[r] = uniform(0.8, 1.2);
            }
            const double sway_phase = uniform(0.0, two_pi);
            const double tx0 = uniform(-20.0, 20.0);
            const double ty0 = uniform(-20.0, 20.0);

            RawSequence seq;
            seq.subject_id = sid;
            char qid[64];
            std::snprintf(qid, sizeof qid, "%s_q%02d", sid, j + 1);
            seq.sequence_id = qid;
            seq.label = label;
            seq.frames.reserve(static_cast<std::size_t>(frames));
            for (int t = 0; t < frames; ++t) {
                const double tt = static_cast<double>(t) / (frames - 1);
                auto act = [&](int r) {
                    return amplitude * gain[r] *
                           (0.5 - 0.5 * std::cos(two_pi * cycles * tt + phase[r]));
                };
                LandmarkFrame z = neutral + act(0) * basis.jaw + act(1) * basis.nose +
                                  act(2) * basis.mouth + act(3) * basis.eyes;
                const double roll = yaw + 0.03 * std::sin(two_pi * 0.5 * tt + sway_phase);
                const double scale = face_scale * (1.0 + 0.02 * std::sin(two_pi * tt + sway_phase));
                const double c = std::cos(roll), sn = std::sin(roll);
                LandmarkFrame img(n, 2);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double x = c * z(i, 0) - sn * z(i, 1);
                    const double y = sn * z(i, 0) + c * z(i, 1);
                    img(i, 0) = 320.0 + tx0 + 2.0 * tt + scale * x +
                                p.noise * face_scale * gauss(rng);
                    img(i, 1) = 240.0 + ty0 - scale * y + p.noise * face_scale * gauss(rng);
                }
                seq.frames.push_back(std::move(img));
            }
            out.push_back(std::move(seq));
        }
    }
    return out;
}

}  // namespace gramtraj
