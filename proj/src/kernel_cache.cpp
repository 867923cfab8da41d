#include "gramtraj/kernel_cache.hpp"

#include "gramtraj/config.hpp"
#include "gramtraj/dataset_io.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gramtraj {

namespace {
constexpr const char* kMagic = "gramtraj-kernel v1";
}

std::string canonical_key(const KernelSpec& spec) {
    std::ostringstream key;
    key << "region=" << spec.region << ";indices=";
    for (std::size_t i = 0; i < spec.indices.size(); ++i) key << (i ? "," : "") << spec.indices[i];
    key << ";sigma=" << hex_double(spec.sigma)
        << ";lambda=" << (spec.lambda ? hex_double(*spec.lambda) : std::string("none"))
        << ";sampling=" << hex_double(spec.sampling) << ";mode=" << to_string(spec.mode)
        << ";normalize=" << (spec.normalize ? 1 : 0)
        << ";scale=" << (spec.scale_normalize ? 1 : 0) << ";data=" << spec.dataset_hash;
    return key.str();
}

void write_kernel(std::ostream& out, const std::string& key, const SimilarityMatrix& kernel) {
    out << kMagic << "\n"
        << "key " << key << "\n"
        << "region " << kernel.region << "\n"
        << "sigma " << hex_double(kernel.sigma) << "\n"
        << "size " << kernel.size() << "\n";
    for (const auto& id : kernel.ids) out << "id " << id << "\n";
    for (Eigen::Index i = 0; i < kernel.size(); ++i) {
        for (Eigen::Index j = 0; j < kernel.size(); ++j) {
            out << (j ? " " : "") << hex_double(kernel.values(i, j));
        }
        out << "\n";
    }
    out << "end\n";
}

std::optional<SimilarityMatrix> read_kernel(std::istream& in, const std::string& expected_key,
                                            std::string* problem) {
    auto fail = [problem](const std::string& why) -> std::optional<SimilarityMatrix> {
        if (problem) *problem = why;
        return std::nullopt;
    };
    auto field = [&in](const std::string& name, std::string& value) {
        std::string line;
        if (!std::getline(in, line) || line.rfind(name + " ", 0) != 0) return false;
        value = line.substr(name.size() + 1);
        return true;
    };
    std::string line;
    if (!std::getline(in, line) || line != kMagic) return fail("bad header");
    std::string key, region, sigma, size_text;
    if (!field("key", key)) return fail("missing key");
    if (key != expected_key) return fail("key mismatch");
    if (!field("region", region) || !field("sigma", sigma) || !field("size", size_text)) {
        return fail("missing metadata");
    }
    SimilarityMatrix k;
    try {
        k.region = region;
        k.sigma = parse_hex_double(sigma);
        const long n = std::stol(size_text);
        if (n < 0) return fail("negative size");
        k.ids.resize(static_cast<std::size_t>(n));
        for (auto& id : k.ids) {
            if (!field("id", id)) return fail("truncated id list");
        }
        k.values.resize(n, n);
        for (long i = 0; i < n; ++i) {
            if (!std::getline(in, line)) return fail("truncated at row " + std::to_string(i));
            std::istringstream row(line);
            std::string token;
            for (long j = 0; j < n; ++j) {
                if (!(row >> token)) return fail("short row " + std::to_string(i));
                k.values(i, j) = parse_hex_double(token);
            }
            if (row >> token) return fail("long row " + std::to_string(i));
        }
    } catch (const std::exception& e) {
        return fail(std::string("unparsable value: ") + e.what());
    }
    if (!std::getline(in, line) || line != "end") return fail("missing end marker");
    return k;
}

KernelCache::KernelCache(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::filesystem::create_directories(directory_);
}

std::filesystem::path KernelCache::resolve_directory(const std::string& configured,
                                                     const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("GRAMTRAJ_CACHE_DIR"); env && *env) return env;
    if (!configured.empty()) return configured;
    return fallback;
}

std::filesystem::path KernelCache::path_for(const KernelSpec& spec) const {
    return directory_ / (spec.region + "-" + fnv1a_hex(canonical_key(spec)) + ".kernel");
}

std::optional<SimilarityMatrix> KernelCache::load(const KernelSpec& spec) {
    const auto path = path_for(spec);
    std::ifstream in(path);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    std::string problem;
    auto k = read_kernel(in, canonical_key(spec), &problem);
    if (!k) {
        ++misses_;
        std::lock_guard lock(mutex_);
        warnings_.push_back("ignoring cache entry " + path.string() + ": " + problem);
        std::clog << "warning: " << warnings_.back() << "\n";
        return std::nullopt;
    }
    ++hits_;
    return k;
}

void KernelCache::store(const KernelSpec& spec, const SimilarityMatrix& kernel) {
    std::lock_guard lock(mutex_);
    const auto path = path_for(spec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("kernel cache: cannot write " + tmp.string());
        write_kernel(out, canonical_key(spec), kernel);
        if (!out) throw Error("kernel cache: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::string> KernelCache::warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
}

}  // namespace gramtraj
