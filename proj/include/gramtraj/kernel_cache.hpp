#pragma once

#include "gramtraj/alignment.hpp"
#include "gramtraj/curve_fitting.hpp"

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace gramtraj {

/// Everything that determines one kernel matrix.
struct KernelSpec {
    std::string region;
    std::vector<int> indices;
    double sigma = 0.7;
    FittingLambda lambda;
    double sampling = 1.0;
    DistanceMode mode = DistanceMode::squared;
    bool normalize = true;
    bool scale_normalize = true;
    std::string dataset_hash;
};

/// Stable text form of a spec; floats are written in hex.
std::string canonical_key(const KernelSpec& spec);

/// Writes `key`, ids and hex-float rows, terminated by an `end` line.
void write_kernel(std::ostream& out, const std::string& key, const SimilarityMatrix& kernel);

/// Returns nullopt (and fills `problem`) on a malformed or truncated file,
/// or when the stored key differs from `expected_key`.
std::optional<SimilarityMatrix> read_kernel(std::istream& in, const std::string& expected_key,
                                            std::string* problem = nullptr);

/// On-disk kernel store keyed by canonical_key. Thread-safe; writes are
/// serialised and atomic (temporary file + rename).
class KernelCache {
public:
    explicit KernelCache(std::filesystem::path directory);

    /// GRAMTRAJ_CACHE_DIR if set, else `configured` if non-empty, else `fallback`.
    static std::filesystem::path resolve_directory(const std::string& configured,
                                                   const std::filesystem::path& fallback);

    const std::filesystem::path& directory() const { return directory_; }
    std::filesystem::path path_for(const KernelSpec& spec) const;

    /// Corrupt entries are treated as misses and reported as warnings.
    std::optional<SimilarityMatrix> load(const KernelSpec& spec);
    void store(const KernelSpec& spec, const SimilarityMatrix& kernel);

    long hits() const { return hits_; }
    long misses() const { return misses_; }
    std::vector<std::string> warnings() const;

private:
    std::filesystem::path directory_;
    mutable std::mutex mutex_;
    std::atomic<long> hits_{0};
    std::atomic<long> misses_{0};
    std::vector<std::string> warnings_;
};

}  // namespace gramtraj
