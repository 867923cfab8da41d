#pragma once

#include "gramtraj/evaluation.hpp"
#include "gramtraj/kernel_cache.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gramtraj {

/// Appends flipped copies as configured by `augment.mode`.
Dataset prepare_dataset(const Dataset& raw, const ExperimentConfig& config);

/// Splits for the configured protocol.
std::vector<Split> make_splits(const Dataset& dataset, const ExperimentConfig& config);

/// Per sequence, the (optionally fitted and resampled) trajectory of every
/// fusion region plus "face" (all landmarks).
using SequenceTrajectories = std::map<std::string, Trajectory>;

SequenceTrajectories prepare_trajectories(const RawSequence& seq, const ExperimentConfig& config);

/// Kernel spec of `name` ("jaw", ..., "face", "product") under `config`.
KernelSpec kernel_spec(const std::string& name, const ExperimentConfig& config,
                       int landmark_count, const std::string& data_hash);

/// Hash over the canonical keys of every kernel the config can produce.
/// Changes exactly when a kernel-affecting setting changes.
std::string kernel_config_hash(const ExperimentConfig& config, int landmark_count,
                               const std::string& data_hash = {});

/// Computes (or loads from `cache`, when given) the named kernels.
KernelBundle compute_kernels(const Dataset& dataset, const ExperimentConfig& config,
                             const std::vector<std::string>& names, KernelCache* cache = nullptr);

ProtocolOptions protocol_options(const ExperimentConfig& config, Strategy strategy);

/// Kernels, training and evaluation of one strategy under the configured
/// protocol and hyperparameters.
ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config,
                                Strategy strategy, KernelCache* cache = nullptr);

/// Hyperparameter grid over the config's sigma/lambda/sampling grids.
GridSearchResult run_grid_search(const Dataset& dataset, const ExperimentConfig& config,
                                 Strategy strategy, KernelCache* cache = nullptr);

// ---------------------------------------------------------------- models

/// Training trajectory kept by a deployed model (support vectors only).
struct ModelSample {
    std::string sequence_id;
    /// log K(x, x) per kernel term: one per region for early fusion, one
    /// otherwise.
    std::vector<double> log_self_similarity;
    /// Trajectories the kernel compares (four for product and early fusion).
    std::vector<Trajectory> trajectories;
};

struct KernelModel {
    std::string kernel;  // "jaw", ..., "face", "product", "early"
    SvrModel svr;
    std::vector<ModelSample> samples;  // aligned with svr.training_ids
};

/// Everything `predict` needs to score unseen sequences.
struct DeployedModel {
    Strategy strategy = Strategy::late;
    double sigma = 0.7;
    FittingLambda lambda;
    double sampling = 1.0;
    DistanceMode mode = DistanceMode::squared;
    bool normalize = true;
    bool scale_normalize = true;
    int landmark_count = 68;
    std::map<std::string, std::vector<int>> regions;
    PostProcess post;
    FusionWeights weights;
    std::string provenance;
    std::vector<KernelModel> kernels;
};

/// Trains on every sequence of `dataset` (augmented copies included) with
/// the given fusion weights.
DeployedModel train_deployed_model(const Dataset& dataset, const ExperimentConfig& config,
                                   Strategy strategy, const FusionWeights& weights,
                                   KernelCache* cache = nullptr);

void save_model(const DeployedModel& model, const std::filesystem::path& path);
DeployedModel load_model(const std::filesystem::path& path);

double predict_sequence(const DeployedModel& model, const RawSequence& seq);

// --------------------------------------------------------------- reports

/// "LOSO cross validation" / "5-fold cross validation".
std::string protocol_label(Protocol protocol, int folds);
/// "Whole Face", "Cartesian product", "Early fusion", "Late fusion",
/// "Late fusion - augmented".
std::string setup_label(Strategy strategy, bool augmented);

void write_predictions_csv(std::ostream& out, const ExperimentReport& report);
void write_folds_csv(std::ostream& out, const ExperimentReport& report);
/// key,value lines: settings, MAE, RMSE, baseline and per-intensity MAE.
void write_summary_csv(std::ostream& out, const ExperimentReport& report, int k);

/// sigma,lambda then one MAE column per sampling rate; `best_sampling`
/// marks each row's best rate, `best_overall` the table minimum.
void write_grid_table_csv(std::ostream& out, const GridSearchResult& result);

/// protocol,regression_setup,mae,rmse.
void write_comparison_csv(std::ostream& out, const std::vector<ExperimentReport>& reports);

}  // namespace gramtraj
