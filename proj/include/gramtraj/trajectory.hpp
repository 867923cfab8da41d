#pragma once

#include "gramtraj/geometry.hpp"

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace gramtraj {

/// n x 2 landmark coordinates of one frame.
using LandmarkFrame = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct RawSequence {
    std::string sequence_id;
    std::string subject_id;
    double label = 0.0;
    std::vector<LandmarkFrame> frames;
    /// Set on flipped copies produced by augmentation; such sequences are
    /// only ever placed in training sets.
    bool augmented = false;

    Eigen::Index landmark_count() const { return frames.empty() ? 0 : frames.front().rows(); }
};

using Dataset = std::vector<RawSequence>;

/// Throws unless the sequence has >= 2 frames of identical, finite shape.
void validate_sequence(const RawSequence& seq);

struct Region {
    std::string name;
    std::vector<int> indices;
};

/// Ordered, pairwise-disjoint landmark index sets.
class RegionMap {
public:
    RegionMap() = default;
    explicit RegionMap(std::vector<Region> regions);

    /// jaw 0-16, nose 27-35, mouth 48-67 (48-65 for 66 points), eyes 17-26 + 36-47.
    static RegionMap standard(int landmark_count);
    /// One region named "face" covering every landmark.
    static RegionMap whole_face(int landmark_count);

    const std::vector<Region>& regions() const { return regions_; }
    std::size_t size() const { return regions_.size(); }
    const Region& at(const std::string& name) const;
    int max_index() const;

private:
    std::vector<Region> regions_;
};

struct Trajectory {
    std::string sequence_id;
    std::string subject_id;
    double label = 0.0;
    std::string region;
    std::vector<FeatureFactor> points;
    std::vector<double> times;

    std::size_t size() const { return points.size(); }
};

struct TrajectoryOptions {
    bool scale_normalize = true;
    double sampling_rate = 1.0;
};

LandmarkFrame center_frame(const LandmarkFrame& z);
LandmarkFrame scale_normalize(const LandmarkFrame& z_centered);
std::vector<LandmarkFrame> velocities(const std::vector<LandmarkFrame>& frames);

/// Keeps every k-th frame, k = round(1 / rate), starting with frame 0.
std::vector<LandmarkFrame> subsample(const std::vector<LandmarkFrame>& frames, double rate);

/// Per region, one factor [Z_region; V_region] per retained frame except the
/// last. Order: center, scale, subsample, velocity, split, stack.
std::map<std::string, Trajectory> build_trajectories(const RawSequence& seq,
                                                     const RegionMap& regions,
                                                     const TrajectoryOptions& options);

/// Mirrors x -> -x; the copy's id gets a "+flip" suffix.
RawSequence flip_augment(const RawSequence& seq);

struct BelowMeanClassCount {};
struct ExplicitLabels {
    std::set<int> labels;
};
using AugmentationRule = std::variant<BelowMeanClassCount, ExplicitLabels>;

/// Appends a flipped copy of every sequence whose rounded label is selected
/// by the rule. Input sequences are kept unchanged and in order.
Dataset augment_minority_classes(const Dataset& dataset, const AugmentationRule& rule);

int label_class(double label);

}  // namespace gramtraj
