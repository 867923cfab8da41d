#pragma once

#include "gramtraj/alignment.hpp"
#include "gramtraj/curve_fitting.hpp"
#include "gramtraj/regression.hpp"
#include "gramtraj/trajectory.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gramtraj {

enum class Strategy { whole_face, product, early, late };
enum class Protocol { loso, kfold };

std::string to_string(Strategy s);
std::string to_string(Protocol p);
Strategy parse_strategy(const std::string& text);
Protocol parse_protocol(const std::string& text);

enum class AugmentationMode { none, below_mean, labels };

struct SynthParameters {
    int subjects = 20;
    int sequences_per_subject = 10;
    int landmarks = 68;
    int levels = 5;
    int min_frames = 36;
    int max_frames = 48;
    double noise = 0.004;
};

/// Every tunable of a run. Loaded from a flat `key = value` file with dotted
/// keys; see `config_keys()` for the full list.
struct ExperimentConfig {
    std::string manifest;

    // trajectory
    bool scale_normalize = true;
    double sampling = 0.5;
    std::string region_scheme = "standard";  // standard | custom
    std::map<std::string, std::vector<int>> custom_regions;

    // curve fitting
    FittingLambda lambda = 100.0;

    // alignment
    double sigma = 0.7;
    DistanceMode distance_mode = DistanceMode::squared;
    bool normalize_kernel = true;
    bool validate_psd = false;

    SvrParameters svr;

    // evaluation
    Protocol protocol = Protocol::loso;
    int k = 5;
    std::vector<Strategy> strategies{Strategy::late};
    bool clamp = true;
    double label_min = 0.0;
    double label_max = 10.0;

    AugmentationMode augmentation = AugmentationMode::none;
    std::vector<int> augment_labels;

    // hyperparameter grid
    std::vector<double> sigma_grid{0.5, 0.7, 0.9};
    std::vector<FittingLambda> lambda_grid{std::nullopt, 10.0, 100.0, 1000.0};
    std::vector<double> sampling_grid{0.25, 0.5, 1.0};

    SynthParameters synth;
    unsigned long long seed = 7;
    unsigned threads = 0;
    std::string cache_dir;

    RegionMap regions_for(int landmark_count) const;
    KernelOptions kernel_options() const;
    TrajectoryOptions trajectory_options() const;
};

/// All recognised keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Keys whose value changes the computed kernels.
bool is_kernel_affecting(const std::string& key);

/// Applies one `key=value` assignment; throws naming the key on bad input.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Cross-key consistency checks (run after all assignments).
void validate_config(const ExperimentConfig& config);

/// Reads `key = value` lines ('#' starts a comment).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Renders the config back to `key = value` lines (round-trips).
std::string render_config(const ExperimentConfig& config);

/// Hex-float rendering used in cache keys and lossless text files.
std::string hex_double(double v);
double parse_hex_double(const std::string& text);
std::string lambda_to_string(const FittingLambda& lambda);

}  // namespace gramtraj
