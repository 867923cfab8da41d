#include "gramtraj/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace gramtraj {

void validate_sequence(const RawSequence& seq) {
    if (seq.frames.size() < 2) {
        throw Error("sequence " + seq.sequence_id + ": needs at least 2 frames, got " +
                    std::to_string(seq.frames.size()));
    }
    const auto n = seq.frames.front().rows();
    if (n < 1) {
        throw Error("sequence " + seq.sequence_id + ": empty frame");
    }
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        if (seq.frames[i].rows() != n) {
            throw Error("sequence " + seq.sequence_id + ": frame " + std::to_string(i) +
                        " has " + std::to_string(seq.frames[i].rows()) + " landmarks, expected " +
                        std::to_string(n));
        }
        if (!seq.frames[i].allFinite()) {
            throw Error("sequence " + seq.sequence_id + ": non-finite coordinate in frame " +
                        std::to_string(i));
        }
    }
    if (!std::isfinite(seq.label)) {
        throw Error("sequence " + seq.sequence_id + ": non-finite label");
    }
}

RegionMap::RegionMap(std::vector<Region> regions) : regions_(std::move(regions)) {
    if (regions_.empty()) {
        throw Error("RegionMap: no regions");
    }
    std::set<int> seen;
    std::set<std::string> names;
    for (const auto& r : regions_) {
        if (r.indices.empty()) {
            throw Error("RegionMap: region '" + r.name + "' is empty");
        }
        if (!names.insert(r.name).second) {
            throw Error("RegionMap: duplicate region name '" + r.name + "'");
        }
        for (int idx : r.indices) {
            if (idx < 0) {
                throw Error("RegionMap: negative index in region '" + r.name + "'");
            }
            if (!seen.insert(idx).second) {
                throw Error("RegionMap: landmark " + std::to_string(idx) +
                            " assigned to more than one region");
            }
        }
    }
}

namespace {

std::vector<int> index_range(int first, int last) {
    std::vector<int> out;
    for (int i = first; i <= last; ++i) out.push_back(i);
    return out;
}

}  // namespace

RegionMap RegionMap::standard(int landmark_count) {
    if (landmark_count != 68 && landmark_count != 66) {
        throw Error("RegionMap::standard: supported landmark counts are 66 and 68, got " +
                    std::to_string(landmark_count));
    }
    std::vector<int> eyes = index_range(17, 26);
    const auto eye_contours = index_range(36, 47);
    eyes.insert(eyes.end(), eye_contours.begin(), eye_contours.end());
    return RegionMap({
        {"jaw", index_range(0, 16)},
        {"nose", index_range(27, 35)},
        {"mouth", index_range(48, landmark_count - 1)},
        {"eyes", eyes},
    });
}

RegionMap RegionMap::whole_face(int landmark_count) {
    if (landmark_count < 1) {
        throw Error("RegionMap::whole_face: landmark count must be positive");
    }
    return RegionMap({{"face", index_range(0, landmark_count - 1)}});
}

const Region& RegionMap::at(const std::string& name) const {
    for (const auto& r : regions_) {
        if (r.name == name) return r;
    }
    throw Error("RegionMap: unknown region '" + name + "'");
}

int RegionMap::max_index() const {
    int m = -1;
    for (const auto& r : regions_) {
        m = std::max(m, *std::max_element(r.indices.begin(), r.indices.end()));
    }
    return m;
}

LandmarkFrame center_frame(const LandmarkFrame& z) {
    if (z.rows() == 0) {
        throw Error("center_frame: empty frame");
    }
    LandmarkFrame out = z;
    out.rowwise() -= z.colwise().mean();
    return out;
}

LandmarkFrame scale_normalize(const LandmarkFrame& z_centered) {
    const double norm = z_centered.norm();
    if (norm == 0.0) return z_centered;
    return z_centered / norm;
}

std::vector<LandmarkFrame> velocities(const std::vector<LandmarkFrame>& frames) {
    if (frames.size() < 2) {
        throw Error("velocities: need at least 2 frames, got " + std::to_string(frames.size()));
    }
    std::vector<LandmarkFrame> out;
    out.reserve(frames.size() - 1);
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        out.push_back(frames[i + 1] - frames[i]);
    }
    return out;
}

std::vector<LandmarkFrame> subsample(const std::vector<LandmarkFrame>& frames, double rate) {
    if (frames.empty()) {
        throw Error("subsample: no frames");
    }
    if (!(rate > 0.0 && rate <= 1.0)) {
        throw Error("subsample: rate must lie in (0, 1], got " + std::to_string(rate));
    }
    const double inverse = 1.0 / rate;
    const auto step = static_cast<std::size_t>(std::llround(inverse));
    if (std::abs(inverse - static_cast<double>(step)) > 1e-9 * inverse) {
        throw Error("subsample: rate " + std::to_string(rate) + " is not 1/k for an integer k");
    }
    std::vector<LandmarkFrame> out;
    for (std::size_t i = 0; i < frames.size(); i += step) {
        out.push_back(frames[i]);
    }
    return out;
}

std::map<std::string, Trajectory> build_trajectories(const RawSequence& seq,
                                                     const RegionMap& regions,
                                                     const TrajectoryOptions& options) {
    validate_sequence(seq);
    const auto n = seq.landmark_count();
    if (regions.max_index() >= n) {
        throw Error("build_trajectories: region index " + std::to_string(regions.max_index()) +
                    " out of range for " + std::to_string(n) + " landmarks (sequence " +
                    seq.sequence_id + ")");
    }

    std::vector<LandmarkFrame> normalized;
    normalized.reserve(seq.frames.size());
    for (const auto& z : seq.frames) {
        LandmarkFrame c = center_frame(z);
        normalized.push_back(options.scale_normalize ? scale_normalize(c) : c);
    }
    const auto kept = subsample(normalized, options.sampling_rate);
    if (kept.size() < 2) {
        throw Error("build_trajectories: sequence " + seq.sequence_id +
                    " has fewer than 2 frames after subsampling");
    }
    const auto vel = velocities(kept);

    std::map<std::string, Trajectory> out;
    for (const auto& region : regions.regions()) {
        const auto k = static_cast<Eigen::Index>(region.indices.size());
        Trajectory traj{seq.sequence_id, seq.subject_id, seq.label, region.name, {}, {}};
        traj.points.reserve(vel.size());
        for (std::size_t i = 0; i < vel.size(); ++i) {
            FactorMatrix f(2 * k, 2);
            for (Eigen::Index r = 0; r < k; ++r) {
                const auto idx = region.indices[static_cast<std::size_t>(r)];
                f.row(r) = kept[i].row(idx);
                f.row(k + r) = vel[i].row(idx);
            }
            traj.points.emplace_back(std::move(f));
            traj.times.push_back(static_cast<double>(i));
        }
        out.emplace(region.name, std::move(traj));
    }
    return out;
}

RawSequence flip_augment(const RawSequence& seq) {
    RawSequence out = seq;
    out.sequence_id += "+flip";
    out.augmented = true;
    for (auto& z : out.frames) {
        z.col(0) = -z.col(0);
    }
    return out;
}

int label_class(double label) { return static_cast<int>(std::lround(label)); }

Dataset augment_minority_classes(const Dataset& dataset, const AugmentationRule& rule) {
    if (dataset.empty()) {
        throw Error("augment_minority_classes: empty dataset");
    }
    std::set<int> selected;
    if (const auto* explicit_labels = std::get_if<ExplicitLabels>(&rule)) {
        selected = explicit_labels->labels;
    } else {
        std::map<int, int> counts;
        for (const auto& s : dataset) {
            if (!s.augmented) ++counts[label_class(s.label)];
        }
        double total = 0.0;
        for (const auto& [cls, c] : counts) total += c;
        const double mean = total / static_cast<double>(counts.size());
        for (const auto& [cls, c] : counts) {
            if (c < mean) selected.insert(cls);
        }
    }

    Dataset out = dataset;
    for (const auto& s : dataset) {
        if (!s.augmented && selected.count(label_class(s.label))) {
            out.push_back(flip_augment(s));
        }
    }
    return out;
}

}  // namespace gramtraj
