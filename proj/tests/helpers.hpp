#pragma once

#include "gramtraj/pipeline.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace gramtraj;

inline FactorMatrix random_factor(std::mt19937_64& rng, Eigen::Index rows, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    FactorMatrix f(rows, 2);
    for (Eigen::Index i = 0; i < rows; ++i) {
        f(i, 0) = g(rng);
        f(i, 1) = g(rng);
    }
    return f;
}

inline Eigen::Matrix2d rotation(double a) {
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

/// Smooth random walk of factors, each a small perturbation of the previous.
inline Trajectory random_trajectory(std::mt19937_64& rng, std::size_t length, Eigen::Index rows,
                                    double step = 0.1, const std::string& id = "t") {
    Trajectory t;
    t.sequence_id = id;
    t.region = "r";
    FactorMatrix f = random_factor(rng, rows);
    for (std::size_t i = 0; i < length; ++i) {
        t.points.emplace_back(f);
        t.times.push_back(static_cast<double>(i));
        f += random_factor(rng, rows, step);
    }
    return t;
}

/// Random landmark sequence with some structure (slow drift plus noise).
inline RawSequence random_sequence(std::mt19937_64& rng, int frames, int landmarks,
                                   const std::string& id = "s", const std::string& subject = "p",
                                   double label = 0.0) {
    RawSequence s{id, subject, label, {}};
    LandmarkFrame z = random_factor(rng, landmarks, 10.0);
    for (int f = 0; f < frames; ++f) {
        s.frames.push_back(z);
        z += random_factor(rng, landmarks, 0.5);
    }
    return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("gramtraj_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline SynthParameters small_synth(int subjects = 6, int per_subject = 5) {
    SynthParameters p;
    p.subjects = subjects;
    p.sequences_per_subject = per_subject;
    p.min_frames = 30;
    p.max_frames = 34;
    return p;
}

}  // namespace testing
