#include "gramtraj/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gramtraj {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
    throw Error("config: invalid value '" + value + "' for key '" + key + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
        bad_value(key, value, "expected a finite number");
    }
    return out;
}

long long to_integer(const std::string& key, const std::string& value) {
    long long out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "expected an integer");
    return out;
}

int to_positive_int(const std::string& key, const std::string& value) {
    const auto v = to_integer(key, value);
    if (v < 1 || v > 1000000000) bad_value(key, value, "expected a positive integer");
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value, "expected true|false");
}

FittingLambda to_lambda(const std::string& key, const std::string& value) {
    if (value == "none" || value == "no_fitting") return std::nullopt;
    const double v = to_double(key, value);
    if (!(v > 0.0)) bad_value(key, value, "lambda must be positive or 'none'");
    return v;
}

double to_sampling(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (!(v > 0.0 && v <= 1.0)) bad_value(key, value, "sampling rate must lie in (0, 1]");
    const double inverse = 1.0 / v;
    if (std::abs(inverse - std::round(inverse)) > 1e-9 * inverse) {
        bad_value(key, value, "sampling rate must be 1/k for an integer k");
    }
    return v;
}

double to_sigma(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (!(v > 0.0)) bad_value(key, value, "sigma must be positive");
    if (v > 1.0) {
        std::clog << "warning: " << key << " = " << value
                  << " lies above the usual range (0, 1]\n";
    }
    return v;
}

std::vector<int> parse_index_set(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            const auto v = to_integer(key, item);
            if (v < 0) bad_value(key, value, "negative landmark index");
            out.push_back(static_cast<int>(v));
        } else {
            const auto lo = to_integer(key, trim(item.substr(0, dash)));
            const auto hi = to_integer(key, trim(item.substr(dash + 1)));
            if (lo < 0 || hi < lo) bad_value(key, value, "bad index range '" + item + "'");
            for (auto i = lo; i <= hi; ++i) out.push_back(static_cast<int>(i));
        }
    }
    if (out.empty()) bad_value(key, value, "empty index set");
    return out;
}

std::string render_index_set(const std::vector<int>& indices) {
    std::string out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(indices[i]);
    }
    return out;
}

// Shortest text that parses back to the same double.
std::string render_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& values, F render) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += render(values[i]);
    }
    return out;
}

const std::vector<std::string> region_names{"jaw", "nose", "mouth", "eyes"};

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::whole_face: return "whole_face";
        case Strategy::product: return "product";
        case Strategy::early: return "early";
        case Strategy::late: return "late";
    }
    return "?";
}

std::string to_string(Protocol p) { return p == Protocol::loso ? "loso" : "kfold"; }

Strategy parse_strategy(const std::string& text) {
    if (text == "whole_face") return Strategy::whole_face;
    if (text == "product") return Strategy::product;
    if (text == "early") return Strategy::early;
    if (text == "late") return Strategy::late;
    throw Error("unknown strategy '" + text + "' (expected whole_face|product|early|late)");
}

Protocol parse_protocol(const std::string& text) {
    if (text == "loso") return Protocol::loso;
    if (text == "kfold") return Protocol::kfold;
    throw Error("unknown protocol '" + text + "' (expected loso|kfold)");
}

std::string hex_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    if (ec != std::errc()) throw Error("hex_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_hex_double(const std::string& text) {
    double out = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out, std::chars_format::hex);
    if (ec != std::errc() || ptr != end) {
        throw Error("malformed hex-float '" + text + "'");
    }
    return out;
}

std::string lambda_to_string(const FittingLambda& lambda) {
    return lambda ? render_double(*lambda) : std::string("none");
}

RegionMap ExperimentConfig::regions_for(int landmark_count) const {
    if (region_scheme == "standard") return RegionMap::standard(landmark_count);
    std::vector<Region> regions;
    for (const auto& name : region_names) {
        const auto it = custom_regions.find(name);
        if (it == custom_regions.end()) {
            throw Error("config: regions.scheme = custom requires key 'regions." + name + "'");
        }
        regions.push_back({name, it->second});
    }
    RegionMap map(std::move(regions));
    if (map.max_index() >= landmark_count) {
        throw Error("config: custom region index " + std::to_string(map.max_index()) +
                    " out of range for " + std::to_string(landmark_count) + " landmarks");
    }
    return map;
}

KernelOptions ExperimentConfig::kernel_options() const {
    return {sigma, distance_mode, normalize_kernel, validate_psd, threads};
}

TrajectoryOptions ExperimentConfig::trajectory_options() const {
    return {scale_normalize, sampling};
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "data.manifest",
        "trajectory.scale_normalize",
        "trajectory.sampling",
        "regions.scheme",
        "regions.jaw",
        "regions.nose",
        "regions.mouth",
        "regions.eyes",
        "curve.lambda",
        "alignment.sigma",
        "alignment.distance_mode",
        "alignment.normalize",
        "alignment.validate_psd",
        "svr.C",
        "svr.epsilon",
        "svr.tol",
        "svr.max_iter",
        "evaluation.protocol",
        "evaluation.k",
        "evaluation.strategies",
        "evaluation.clamp",
        "evaluation.label_min",
        "evaluation.label_max",
        "augment.mode",
        "augment.labels",
        "grid.sigma",
        "grid.lambda",
        "grid.sampling",
        "synth.subjects",
        "synth.sequences_per_subject",
        "synth.landmarks",
        "synth.levels",
        "synth.min_frames",
        "synth.max_frames",
        "synth.noise",
        "seed",
        "threads",
        "cache.dir",
    };
    return keys;
}

bool is_kernel_affecting(const std::string& key) {
    static const std::vector<std::string> affecting{
        "trajectory.scale_normalize", "trajectory.sampling", "regions.scheme",
        "regions.jaw",                "regions.nose",        "regions.mouth",
        "regions.eyes",               "curve.lambda",        "alignment.sigma",
        "alignment.distance_mode",    "alignment.normalize",
    };
    return std::find(affecting.begin(), affecting.end(), key) != affecting.end();
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "data.manifest") {
        c.manifest = value;
    } else if (key == "trajectory.scale_normalize") {
        c.scale_normalize = to_bool(key, value);
    } else if (key == "trajectory.sampling") {
        c.sampling = to_sampling(key, value);
    } else if (key == "regions.scheme") {
        if (value != "standard" && value != "custom") {
            bad_value(key, value, "expected standard|custom");
        }
        c.region_scheme = value;
    } else if (key.rfind("regions.", 0) == 0 &&
               std::find(region_names.begin(), region_names.end(), key.substr(8)) !=
                   region_names.end()) {
        c.custom_regions[key.substr(8)] = parse_index_set(key, value);
    } else if (key == "curve.lambda") {
        c.lambda = to_lambda(key, value);
    } else if (key == "alignment.sigma") {
        c.sigma = to_sigma(key, value);
    } else if (key == "alignment.distance_mode") {
        try {
            c.distance_mode = parse_distance_mode(value);
        } catch (const Error& e) {
            bad_value(key, value, e.what());
        }
    } else if (key == "alignment.normalize") {
        c.normalize_kernel = to_bool(key, value);
    } else if (key == "alignment.validate_psd") {
        c.validate_psd = to_bool(key, value);
    } else if (key == "svr.C") {
        c.svr.C = to_double(key, value);
        if (!(c.svr.C > 0.0)) bad_value(key, value, "C must be positive");
    } else if (key == "svr.epsilon") {
        c.svr.epsilon = to_double(key, value);
        if (!(c.svr.epsilon >= 0.0)) bad_value(key, value, "epsilon must be non-negative");
    } else if (key == "svr.tol") {
        c.svr.tol = to_double(key, value);
        if (!(c.svr.tol > 0.0)) bad_value(key, value, "tol must be positive");
    } else if (key == "svr.max_iter") {
        c.svr.max_iter = to_positive_int(key, value);
    } else if (key == "evaluation.protocol") {
        try {
            c.protocol = parse_protocol(value);
        } catch (const Error& e) {
            bad_value(key, value, e.what());
        }
    } else if (key == "evaluation.k") {
        c.k = to_positive_int(key, value);
    } else if (key == "evaluation.strategies") {
        std::vector<Strategy> strategies;
        try {
            for (const auto& s : split_list(value)) strategies.push_back(parse_strategy(s));
        } catch (const Error& e) {
            bad_value(key, value, e.what());
        }
        if (strategies.empty()) bad_value(key, value, "no strategy given");
        c.strategies = strategies;
    } else if (key == "evaluation.clamp") {
        c.clamp = to_bool(key, value);
    } else if (key == "evaluation.label_min") {
        c.label_min = to_double(key, value);
    } else if (key == "evaluation.label_max") {
        c.label_max = to_double(key, value);
    } else if (key == "augment.mode") {
        if (value == "none") c.augmentation = AugmentationMode::none;
        else if (value == "below_mean") c.augmentation = AugmentationMode::below_mean;
        else if (value == "labels") c.augmentation = AugmentationMode::labels;
        else bad_value(key, value, "expected none|below_mean|labels");
    } else if (key == "augment.labels") {
        c.augment_labels.clear();
        for (const auto& s : split_list(value)) {
            c.augment_labels.push_back(static_cast<int>(to_integer(key, s)));
        }
    } else if (key == "grid.sigma") {
        c.sigma_grid.clear();
        for (const auto& s : split_list(value)) c.sigma_grid.push_back(to_sigma(key, s));
        if (c.sigma_grid.empty()) bad_value(key, value, "empty grid");
    } else if (key == "grid.lambda") {
        c.lambda_grid.clear();
        for (const auto& s : split_list(value)) c.lambda_grid.push_back(to_lambda(key, s));
        if (c.lambda_grid.empty()) bad_value(key, value, "empty grid");
    } else if (key == "grid.sampling") {
        c.sampling_grid.clear();
        for (const auto& s : split_list(value)) c.sampling_grid.push_back(to_sampling(key, s));
        if (c.sampling_grid.empty()) bad_value(key, value, "empty grid");
    } else if (key == "synth.subjects") {
        c.synth.subjects = to_positive_int(key, value);
    } else if (key == "synth.sequences_per_subject") {
        c.synth.sequences_per_subject = to_positive_int(key, value);
    } else if (key == "synth.landmarks") {
        c.synth.landmarks = to_positive_int(key, value);
        if (c.synth.landmarks != 66 && c.synth.landmarks != 68) {
            bad_value(key, value, "synthetic faces have 66 or 68 landmarks");
        }
    } else if (key == "synth.levels") {
        c.synth.levels = to_positive_int(key, value);
    } else if (key == "synth.min_frames") {
        c.synth.min_frames = to_positive_int(key, value);
    } else if (key == "synth.max_frames") {
        c.synth.max_frames = to_positive_int(key, value);
    } else if (key == "synth.noise") {
        c.synth.noise = to_double(key, value);
        if (!(c.synth.noise >= 0.0)) bad_value(key, value, "noise must be non-negative");
    } else if (key == "seed") {
        const auto v = to_integer(key, value);
        if (v < 0) bad_value(key, value, "seed must be non-negative");
        c.seed = static_cast<unsigned long long>(v);
    } else if (key == "threads") {
        const auto v = to_integer(key, value);
        if (v < 0 || v > 1024) bad_value(key, value, "expected 0..1024");
        c.threads = static_cast<unsigned>(v);
    } else if (key == "cache.dir") {
        c.cache_dir = value;
    } else {
        throw Error("config: unknown key '" + key + "'");
    }
}

void validate_config(const ExperimentConfig& c) {
    if (c.synth.max_frames < c.synth.min_frames) {
        throw Error("config: synth.max_frames (" + std::to_string(c.synth.max_frames) +
                    ") must be >= synth.min_frames (" + std::to_string(c.synth.min_frames) + ")");
    }
    if (c.synth.min_frames < 2) {
        throw Error("config: synth.min_frames must be at least 2");
    }
    if (c.label_max < c.label_min) {
        throw Error("config: evaluation.label_max must be >= evaluation.label_min");
    }
    if (c.augmentation == AugmentationMode::labels && c.augment_labels.empty()) {
        throw Error("config: augment.mode = labels requires key 'augment.labels'");
    }
    if (c.region_scheme == "custom") {
        for (const auto& name : region_names) {
            if (!c.custom_regions.count(name)) {
                throw Error("config: regions.scheme = custom requires key 'regions." + name + "'");
            }
        }
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    validate_config(config);
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string render_config(const ExperimentConfig& c) {
    std::ostringstream os;
    auto line = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
    if (!c.manifest.empty()) line("data.manifest", c.manifest);
    line("trajectory.scale_normalize", c.scale_normalize ? "true" : "false");
    line("trajectory.sampling", render_double(c.sampling));
    line("regions.scheme", c.region_scheme);
    for (const auto& [name, idx] : c.custom_regions) line("regions." + name, render_index_set(idx));
    line("curve.lambda", lambda_to_string(c.lambda));
    line("alignment.sigma", render_double(c.sigma));
    line("alignment.distance_mode", to_string(c.distance_mode));
    line("alignment.normalize", c.normalize_kernel ? "true" : "false");
    line("alignment.validate_psd", c.validate_psd ? "true" : "false");
    line("svr.C", render_double(c.svr.C));
    line("svr.epsilon", render_double(c.svr.epsilon));
    line("svr.tol", render_double(c.svr.tol));
    line("svr.max_iter", std::to_string(c.svr.max_iter));
    line("evaluation.protocol", to_string(c.protocol));
    line("evaluation.k", std::to_string(c.k));
    line("evaluation.strategies", join(c.strategies, [](Strategy s) { return to_string(s); }));
    line("evaluation.clamp", c.clamp ? "true" : "false");
    line("evaluation.label_min", render_double(c.label_min));
    line("evaluation.label_max", render_double(c.label_max));
    line("augment.mode", c.augmentation == AugmentationMode::none         ? "none"
                         : c.augmentation == AugmentationMode::below_mean ? "below_mean"
                                                                          : "labels");
    if (!c.augment_labels.empty()) {
        line("augment.labels", join(c.augment_labels, [](int v) { return std::to_string(v); }));
    }
    line("grid.sigma", join(c.sigma_grid, render_double));
    line("grid.lambda", join(c.lambda_grid, lambda_to_string));
    line("grid.sampling", join(c.sampling_grid, render_double));
    line("synth.subjects", std::to_string(c.synth.subjects));
    line("synth.sequences_per_subject", std::to_string(c.synth.sequences_per_subject));
    line("synth.landmarks", std::to_string(c.synth.landmarks));
    line("synth.levels", std::to_string(c.synth.levels));
    line("synth.min_frames", std::to_string(c.synth.min_frames));
    line("synth.max_frames", std::to_string(c.synth.max_frames));
    line("synth.noise", render_double(c.synth.noise));
    line("seed", std::to_string(c.seed));
    line("threads", std::to_string(c.threads));
    if (!c.cache_dir.empty()) line("cache.dir", c.cache_dir);
    return os.str();
}

}  // namespace gramtraj
