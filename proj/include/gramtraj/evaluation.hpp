#pragma once

#include "gramtraj/config.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gramtraj {

/// Sequence ids of one cross-validation round. Subject-disjoint.
struct Split {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

/// Subjects in order of first appearance among non-augmented sequences.
std::vector<std::string> subject_order(const Dataset& dataset);

/// One round per subject: that subject is tested, its cyclic successor
/// validates, everyone else trains.
std::vector<Split> loso_splits(const Dataset& dataset);

/// Consecutive blocks of `block` subjects; each block is tested once with
/// the cyclically preceding block as validation.
std::vector<Split> kfold_splits(const Dataset& dataset, int block);

/// Throws unless the three sets are disjoint, subject-disjoint, cover every
/// original sequence, and augmented copies only appear in training.
void check_split(const Split& split, const Dataset& dataset);

/// Region order used by late fusion.
inline const std::array<std::string, 4> fusion_regions{"jaw", "nose", "mouth", "eyes"};

/// Late-fusion weights for jaw, nose, mouth, eyes (in that order).
struct FusionWeights {
    std::array<double, 4> values{1.0, 1.0, 1.0, 1.0};

    bool operator==(const FusionWeights&) const = default;
};

using RegionPredictions = std::array<double, 4>;

/// Entrywise mean of kernels sharing one id ordering.
SimilarityMatrix early_fuse(std::span<const SimilarityMatrix> kernels);

/// (w_j y_jaw + w_n y_nose + w_m y_mouth + w_e y_eyes) / 4.
double late_fuse(const RegionPredictions& predictions, const FusionWeights& weights);

/// {0.1, 0.2, ..., 1.0}.
std::vector<double> default_weight_grid();

struct PostProcess {
    bool clamp = true;
    double lo = 0.0;
    double hi = 10.0;

    double operator()(double value) const;
};

/// Exhaustive search over grid^4 minimising validation MAE of the fused
/// (post-processed) predictions; ties keep the lexicographically first tuple.
FusionWeights grid_search_weights(std::span<const RegionPredictions> validation_predictions,
                                  std::span<const double> validation_labels,
                                  std::span<const double> grid, const PostProcess& post);

double mae(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);

struct IntensityError {
    double mae = 0.0;
    int count = 0;
};

/// MAE bucketed by the ground-truth label rounded to the nearest integer.
std::map<int, IntensityError> per_intensity_mae(std::span<const double> y,
                                                std::span<const double> y_hat);

/// Kernels available to a protocol run, keyed by region name
/// ("jaw", "nose", "mouth", "eyes", "face", "product").
using KernelBundle = std::map<std::string, SimilarityMatrix>;

/// Kernel names a strategy needs.
std::vector<std::string> required_kernels(Strategy strategy);

struct ProtocolOptions {
    Strategy strategy = Strategy::late;
    SvrParameters svr;
    PostProcess post;
};

struct SequencePrediction {
    std::string sequence_id;
    std::string subject_id;
    double label = 0.0;
    double prediction = 0.0;
    int fold = 0;
};

struct FoldReport {
    int fold = 0;
    std::vector<std::string> test_subjects;
    std::vector<std::string> validation_subjects;
    double validation_mae = 0.0;
    double baseline_prediction = 0.0;
    std::optional<FusionWeights> weights;
    bool svr_converged = true;
};

struct ExperimentReport {
    Strategy strategy = Strategy::late;
    Protocol protocol = Protocol::loso;
    double sigma = 0.0;
    FittingLambda lambda;
    double sampling = 1.0;
    bool augmented = false;

    std::vector<SequencePrediction> predictions;
    std::vector<FoldReport> folds;
    double mae = 0.0;
    double rmse = 0.0;
    /// MAE of predicting the training-label mean in every fold.
    double baseline_mae = 0.0;
    /// Pooled MAE over every fold's validation set.
    double validation_mae = 0.0;
    std::map<int, IntensityError> per_intensity;
};

/// Trains on each split's training ids, tunes fusion weights on its
/// validation ids and predicts its test ids.
ExperimentReport run_protocol(const Dataset& dataset, const std::vector<Split>& splits,
                              const KernelBundle& kernels, const ProtocolOptions& options);

struct GridCell {
    double sigma = 0.0;
    FittingLambda lambda;
    double sampling = 1.0;
    double validation_mae = 0.0;
    double test_mae = 0.0;
};

struct GridSearchResult {
    std::vector<GridCell> table;
    std::size_t best = 0;
    const GridCell& best_cell() const { return table.at(best); }
};

using KernelProvider =
    std::function<KernelBundle(double sigma, const FittingLambda& lambda, double sampling)>;

/// Runs the protocol for every (sigma, lambda, sampling) and picks the cell
/// with the smallest validation MAE (first in sorted grid order on ties).
GridSearchResult grid_search_hyperparams(const Dataset& dataset, const std::vector<Split>& splits,
                                         std::vector<double> sigma_grid,
                                         std::vector<FittingLambda> lambda_grid,
                                         std::vector<double> sampling_grid,
                                         const KernelProvider& provider,
                                         const ProtocolOptions& options);

/// Most frequent per-fold weight tuple (lexicographically first on ties).
FusionWeights consensus_weights(const std::vector<FoldReport>& folds);

}  // namespace gramtraj
