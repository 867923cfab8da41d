#pragma once

#include "gramtraj/trajectory.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gramtraj {

struct ManifestRow {
    std::string sequence_id;
    std::string subject_id;
    double label = 0.0;
    std::filesystem::path landmark_file;  // resolved against the manifest directory
    int n_landmarks = 0;
};

/// CSV with header `sequence_id,subject_id,label,landmark_file,n_landmarks`.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

struct IngestResult {
    Dataset dataset;
    /// One entry per rejected row or file, with file/row diagnostics.
    std::vector<std::string> errors;
};

/// Loads every sequence listed in the manifest; collects all problems
/// instead of stopping at the first.
IngestResult ingest_report(const std::filesystem::path& manifest_path);

/// As ingest_report, throwing one error that lists every offender.
Dataset ingest(const std::filesystem::path& manifest_path);

/// One row per frame, columns x1,y1,...,xn,yn; an optional header line is
/// detected by its first field not being a number.
std::vector<LandmarkFrame> read_landmark_csv(const std::filesystem::path& path);

void write_landmark_csv(const std::filesystem::path& path, const std::vector<LandmarkFrame>& frames);

/// Writes `<dir>/manifest.csv` plus one landmark CSV per sequence; returns
/// the manifest path. Numbers use the shortest round-tripping decimal form.
std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_decimal(double v);

/// FNV-1a 64 over every id, label and coordinate bit pattern.
std::string dataset_hash(const Dataset& dataset);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace gramtraj
