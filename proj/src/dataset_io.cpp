#include "gramtraj/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace gramtraj {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos ? std::string()
                                                 : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& out) {
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    void text(const std::string& s) {
        const std::uint64_t n = s.size();
        bytes(&n, sizeof n);
        bytes(s.data(), s.size());
    }
    void number(double v) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        bytes(&bits, sizeof bits);
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
        return buf;
    }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string format_decimal(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_decimal: conversion failed");
    return std::string(buf, ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
    Fnv1a h;
    h.bytes(bytes.data(), bytes.size());
    return h.hex();
}

std::string dataset_hash(const Dataset& dataset) {
    Fnv1a h;
    for (const auto& s : dataset) {
        h.text(s.sequence_id);
        h.text(s.subject_id);
        h.number(s.label);
        h.bytes(&s.augmented, sizeof s.augmented);
        const std::uint64_t frames = s.frames.size();
        h.bytes(&frames, sizeof frames);
        for (const auto& z : s.frames) {
            const std::uint64_t rows = static_cast<std::uint64_t>(z.rows());
            h.bytes(&rows, sizeof rows);
            for (Eigen::Index r = 0; r < z.rows(); ++r) {
                h.number(z(r, 0));
                h.number(z(r, 1));
            }
        }
    }
    return h.hex();
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("manifest: cannot open '" + path.string() + "'");
    const auto base = path.parent_path();
    std::vector<ManifestRow> rows;
    std::set<std::string> ids;
    std::vector<std::string> errors;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto fields = split_csv_line(line);
        if (line_no == 1 && !fields.empty() && fields[0] == "sequence_id") continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != 5) {
            errors.push_back(where + ": expected 5 fields, got " + std::to_string(fields.size()));
            continue;
        }
        ManifestRow row;
        row.sequence_id = fields[0];
        row.subject_id = fields[1];
        double n = 0.0;
        if (row.sequence_id.empty() || row.subject_id.empty()) {
            errors.push_back(where + ": empty sequence or subject id");
            continue;
        }
        if (!parse_number(fields[2], row.label) || !std::isfinite(row.label)) {
            errors.push_back(where + ": label '" + fields[2] + "' is not a finite number");
            continue;
        }
        if (!parse_number(fields[4], n) || n < 1 || n != std::floor(n)) {
            errors.push_back(where + ": n_landmarks '" + fields[4] + "' is not a positive integer");
            continue;
        }
        row.n_landmarks = static_cast<int>(n);
        row.landmark_file = std::filesystem::path(fields[3]);
        if (row.landmark_file.is_relative()) row.landmark_file = base / row.landmark_file;
        if (!ids.insert(row.sequence_id).second) {
            errors.push_back(where + ": duplicate sequence id '" + row.sequence_id + "'");
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (!errors.empty()) {
        std::string msg = "manifest has " + std::to_string(errors.size()) + " invalid row(s):";
        for (const auto& e : errors) msg += "\n  " + e;
        throw Error(msg);
    }
    return rows;
}

std::vector<LandmarkFrame> read_landmark_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(path.string() + ": cannot open landmark file");
    std::vector<LandmarkFrame> frames;
    std::string line;
    int line_no = 0;
    std::size_t columns = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto fields = split_csv_line(line);
        double probe = 0.0;
        if (first_content && !fields.empty() && !parse_number(fields[0], probe)) {
            first_content = false;  // header row
            continue;
        }
        first_content = false;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() % 2 != 0 || fields.empty()) {
            throw Error(where + ": odd or empty column count " + std::to_string(fields.size()));
        }
        if (columns == 0) columns = fields.size();
        if (fields.size() != columns) {
            throw Error(where + ": " + std::to_string(fields.size()) + " columns, expected " +
                        std::to_string(columns));
        }
        LandmarkFrame z(static_cast<Eigen::Index>(columns / 2), 2);
        for (std::size_t c = 0; c < columns; ++c) {
            double v = 0.0;
            if (!parse_number(fields[c], v) || !std::isfinite(v)) {
                throw Error(where + ": column " + std::to_string(c + 1) + " value '" + fields[c] +
                            "' is not a finite number");
            }
            z(static_cast<Eigen::Index>(c / 2), static_cast<Eigen::Index>(c % 2)) = v;
        }
        frames.push_back(std::move(z));
    }
    return frames;
}

IngestResult ingest_report(const std::filesystem::path& manifest_path) {
    IngestResult result;
    const auto rows = read_manifest(manifest_path);
    for (const auto& row : rows) {
        try {
            if (!std::filesystem::exists(row.landmark_file)) {
                throw Error(row.landmark_file.string() + ": file does not exist");
            }
            RawSequence seq{row.sequence_id, row.subject_id, row.label,
                            read_landmark_csv(row.landmark_file)};
            validate_sequence(seq);
            if (seq.landmark_count() != row.n_landmarks) {
                throw Error(row.landmark_file.string() + ": " +
                            std::to_string(seq.landmark_count()) +
                            " landmarks per frame, manifest says " +
                            std::to_string(row.n_landmarks));
            }
            result.dataset.push_back(std::move(seq));
        } catch (const Error& e) {
            result.errors.push_back("sequence " + row.sequence_id + ": " + e.what());
        }
    }
    return result;
}

Dataset ingest(const std::filesystem::path& manifest_path) {
    auto result = ingest_report(manifest_path);
    if (!result.errors.empty()) {
        std::string msg =
            "ingest rejected " + std::to_string(result.errors.size()) + " sequence(s):";
        for (const auto& e : result.errors) msg += "\n  " + e;
        throw Error(msg);
    }
    if (result.dataset.empty()) throw Error("ingest: manifest lists no sequences");
    return std::move(result.dataset);
}

void write_landmark_csv(const std::filesystem::path& path,
                        const std::vector<LandmarkFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw Error(path.string() + ": cannot write landmark file");
    if (!frames.empty()) {
        for (Eigen::Index i = 0; i < frames.front().rows(); ++i) {
            out << (i ? "," : "") << "x" << i + 1 << ",y" << i + 1;
        }
        out << "\n";
    }
    for (const auto& z : frames) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            out << (i ? "," : "") << format_decimal(z(i, 0)) << "," << format_decimal(z(i, 1));
        }
        out << "\n";
    }
}

std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "landmarks");
    const auto manifest = dir / "manifest.csv";
    std::ofstream out(manifest);
    if (!out) throw Error(manifest.string() + ": cannot write manifest");
    out << "sequence_id,subject_id,label,landmark_file,n_landmarks\n";
    for (const auto& s : dataset) {
        const auto rel = std::filesystem::path("landmarks") / (s.sequence_id + ".csv");
        write_landmark_csv(dir / rel, s.frames);
        out << s.sequence_id << "," << s.subject_id << "," << format_decimal(s.label) << ","
            << rel.generic_string() << "," << s.landmark_count() << "\n";
    }
    return manifest;
}

}  // namespace gramtraj
