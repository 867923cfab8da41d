#pragma once

#include "gramtraj/config.hpp"

namespace gramtraj {

/// Neutral frontal face in the usual 68 (or 66) point layout, centred at the
/// origin with half-width about 1 and y pointing up.
LandmarkFrame face_template(int landmark_count);

/// Deterministic synthetic landmark corpus. Every subject gets its own face
/// shape, head pose and expressiveness; each sequence oscillates region-local
/// deformations (mouth opening, eye closing, nose wrinkle, jaw drop) whose
/// amplitude and rate grow with the label 0 .. levels-1. Labels are balanced
/// within every subject. Same parameters and seed give identical output.
Dataset synthesize(const SynthParameters& params, unsigned long long seed);

}  // namespace gramtraj
