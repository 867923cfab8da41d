#include "gramtraj/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace gramtraj {

namespace {

struct SequenceInfo {
    std::string subject;
    double label;
    bool augmented;
};

std::unordered_map<std::string, SequenceInfo> index_dataset(const Dataset& dataset) {
    std::unordered_map<std::string, SequenceInfo> out;
    for (const auto& s : dataset) {
        if (!out.emplace(s.sequence_id, SequenceInfo{s.subject_id, s.label, s.augmented}).second) {
            throw Error("dataset: duplicate sequence id '" + s.sequence_id + "'");
        }
    }
    return out;
}

// Original sequence ids of the given subjects, plus augmented copies when
// `with_augmented` (training side only).
std::vector<std::string> ids_of(const Dataset& dataset, const std::set<std::string>& subjects,
                                bool with_augmented) {
    std::vector<std::string> out;
    for (const auto& s : dataset) {
        if (subjects.count(s.subject_id) && (with_augmented || !s.augmented)) {
            out.push_back(s.sequence_id);
        }
    }
    return out;
}

Split make_split(const Dataset& dataset, const std::vector<std::string>& subjects,
                 const std::set<std::string>& test, const std::set<std::string>& validation) {
    std::set<std::string> train;
    for (const auto& s : subjects) {
        if (!test.count(s) && !validation.count(s)) train.insert(s);
    }
    Split split{ids_of(dataset, train, true), ids_of(dataset, validation, false),
                ids_of(dataset, test, false)};
    check_split(split, dataset);
    return split;
}

std::vector<double> labels_of(const std::vector<std::string>& ids,
                              const std::unordered_map<std::string, SequenceInfo>& info) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(info.at(id).label);
    return out;
}

std::vector<std::string> subjects_of(const std::vector<std::string>& ids,
                                     const std::unordered_map<std::string, SequenceInfo>& info) {
    std::vector<std::string> out;
    for (const auto& id : ids) {
        const auto& s = info.at(id).subject;
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

const SimilarityMatrix& kernel_named(const KernelBundle& kernels, const std::string& name) {
    const auto it = kernels.find(name);
    if (it == kernels.end()) throw Error("protocol: kernel '" + name + "' was not computed");
    return it->second;
}

bool lambda_less(const FittingLambda& a, const FittingLambda& b) {
    if (!a) return static_cast<bool>(b);
    if (!b) return false;
    return *a < *b;
}

}  // namespace

std::vector<std::string> subject_order(const Dataset& dataset) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : dataset) {
        if (!s.augmented && seen.insert(s.subject_id).second) out.push_back(s.subject_id);
    }
    return out;
}

std::vector<Split> loso_splits(const Dataset& dataset) {
    const auto subjects = subject_order(dataset);
    if (subjects.size() < 3) {
        throw Error("loso_splits: need at least 3 subjects, got " +
                    std::to_string(subjects.size()));
    }
    std::vector<Split> out;
    for (std::size_t t = 0; t < subjects.size(); ++t) {
        const auto& val = subjects[(t + 1) % subjects.size()];
        out.push_back(make_split(dataset, subjects, {subjects[t]}, {val}));
    }
    return out;
}

std::vector<Split> kfold_splits(const Dataset& dataset, int block) {
    const auto subjects = subject_order(dataset);
    if (block < 1) throw Error("kfold_splits: block size must be positive");
    const auto k = static_cast<std::size_t>(block);
    if (subjects.size() < 3 * k) {
        throw Error("kfold_splits: need at least " + std::to_string(3 * k) + " subjects for k = " +
                    std::to_string(k) + ", got " + std::to_string(subjects.size()));
    }
    std::vector<std::set<std::string>> blocks;
    for (std::size_t start = 0; start < subjects.size(); start += k) {
        const auto end = std::min(start + k, subjects.size());
        blocks.emplace_back(subjects.begin() + static_cast<long>(start),
                            subjects.begin() + static_cast<long>(end));
    }
    std::vector<Split> out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& val = blocks[(b + blocks.size() - 1) % blocks.size()];
        out.push_back(make_split(dataset, subjects, blocks[b], val));
    }
    return out;
}

void check_split(const Split& split, const Dataset& dataset) {
    const auto info = index_dataset(dataset);
    std::map<std::string, int> subject_set;  // subject -> set index
    std::set<std::string> seen;
    const std::array<const std::vector<std::string>*, 3> sets{&split.train, &split.validation,
                                                              &split.test};
    for (int k = 0; k < 3; ++k) {
        for (const auto& id : *sets[k]) {
            const auto it = info.find(id);
            if (it == info.end()) throw Error("split: unknown sequence id '" + id + "'");
            if (!seen.insert(id).second) throw Error("split: sequence '" + id + "' used twice");
            if (k > 0 && it->second.augmented) {
                throw Error("split: augmented sequence '" + id + "' outside the training set");
            }
            const auto [pos, inserted] = subject_set.emplace(it->second.subject, k);
            if (!inserted && pos->second != k) {
                throw Error("split: subject '" + it->second.subject +
                            "' appears in more than one set");
            }
        }
    }
    for (const auto& s : dataset) {
        if (!s.augmented && !seen.count(s.sequence_id)) {
            throw Error("split: sequence '" + s.sequence_id + "' is not assigned");
        }
    }
}

SimilarityMatrix early_fuse(std::span<const SimilarityMatrix> kernels) {
    if (kernels.empty()) throw Error("early_fuse: no kernels");
    SimilarityMatrix out = kernels.front();
    out.region = "early";
    for (std::size_t k = 1; k < kernels.size(); ++k) {
        if (kernels[k].ids != out.ids) {
            throw Error("early_fuse: kernel '" + kernels[k].region +
                        "' has a different id ordering");
        }
        out.values += kernels[k].values;
    }
    out.values /= static_cast<double>(kernels.size());
    return out;
}

double late_fuse(const RegionPredictions& p, const FusionWeights& w) {
    return (w.values[0] * p[0] + w.values[1] * p[1] + w.values[2] * p[2] + w.values[3] * p[3]) /
           4.0;
}

std::vector<double> default_weight_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
    return grid;
}

double PostProcess::operator()(double value) const {
    return clamp ? clamp_prediction(value, lo, hi) : value;
}

FusionWeights grid_search_weights(std::span<const RegionPredictions> predictions,
                                  std::span<const double> labels, std::span<const double> grid,
                                  const PostProcess& post) {
    if (predictions.empty()) throw Error("grid_search_weights: empty validation set");
    if (predictions.size() != labels.size()) {
        throw Error("grid_search_weights: prediction/label count mismatch");
    }
    if (grid.empty()) throw Error("grid_search_weights: empty weight grid");
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());

    FusionWeights best;
    double best_err = std::numeric_limits<double>::infinity();
    const auto g = sorted.size();
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b)
            for (std::size_t c = 0; c < g; ++c)
                for (std::size_t d = 0; d < g; ++d) {
                    const FusionWeights w{{sorted[a], sorted[b], sorted[c], sorted[d]}};
                    double err = 0.0;
                    for (std::size_t i = 0; i < predictions.size(); ++i) {
                        err += std::abs(labels[i] - post(late_fuse(predictions[i], w)));
                    }
                    err /= static_cast<double>(predictions.size());
                    // Relative slack keeps round-off from overriding the tie rule.
                    if (!std::isfinite(best_err) || err < best_err - 1e-12 * std::max(1.0, best_err)) {
                        best_err = err;
                        best = w;
                    }
                }
    return best;
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
    if (y.empty() || y.size() != y_hat.size()) {
        throw Error("mae: need equal, non-empty inputs");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
    return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
    if (y.empty() || y.size() != y_hat.size()) {
        throw Error("rmse: need equal, non-empty inputs");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    return std::sqrt(s / static_cast<double>(y.size()));
}

std::map<int, IntensityError> per_intensity_mae(std::span<const double> y,
                                                std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw Error("per_intensity_mae: size mismatch");
    std::map<int, IntensityError> out;
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto& e = out[label_class(y[i])];
        e.mae += std::abs(y[i] - y_hat[i]);
        ++e.count;
    }
    for (auto& [cls, e] : out) e.mae /= e.count;
    return out;
}

std::vector<std::string> required_kernels(Strategy strategy) {
    switch (strategy) {
        case Strategy::whole_face: return {"face"};
        case Strategy::product: return {"product"};
        case Strategy::early:
        case Strategy::late: return {fusion_regions.begin(), fusion_regions.end()};
    }
    return {};
}

ExperimentReport run_protocol(const Dataset& dataset, const std::vector<Split>& splits,
                              const KernelBundle& kernels, const ProtocolOptions& options) {
    const auto info = index_dataset(dataset);
    ExperimentReport report;
    report.strategy = options.strategy;

    // Single kernel for the non-late strategies.
    std::optional<SimilarityMatrix> single;
    if (options.strategy == Strategy::early) {
        std::vector<SimilarityMatrix> parts;
        for (const auto& r : fusion_regions) parts.push_back(kernel_named(kernels, r));
        single = early_fuse(parts);
    } else if (options.strategy != Strategy::late) {
        single = kernel_named(kernels, required_kernels(options.strategy).front());
    }

    std::vector<double> val_y;
    std::vector<double> val_hat;
    std::vector<double> test_y;
    std::vector<double> test_hat;
    std::vector<double> base_hat;

    for (std::size_t f = 0; f < splits.size(); ++f) {
        const auto& split = splits[f];
        FoldReport fold;
        fold.fold = static_cast<int>(f);
        fold.test_subjects = subjects_of(split.test, info);
        fold.validation_subjects = subjects_of(split.validation, info);
        try {
            check_split(split, dataset);
            if (split.train.empty() || split.test.empty()) {
                throw Error("empty training or test set");
            }
            const auto train_y = labels_of(split.train, info);
            const auto fold_val_y = labels_of(split.validation, info);
            fold.baseline_prediction =
                std::accumulate(train_y.begin(), train_y.end(), 0.0) / train_y.size();

            std::vector<double> fold_val_hat;
            std::vector<double> fold_test_hat;
            if (single) {
                const auto trained = train(*single, split.train, train_y, options.svr);
                fold.svr_converged = trained.status.converged;
                for (const auto& id : split.validation) {
                    fold_val_hat.push_back(options.post(predict(trained.model, *single, id)));
                }
                for (const auto& id : split.test) {
                    fold_test_hat.push_back(options.post(predict(trained.model, *single, id)));
                }
            } else {
                std::vector<SvrModel> models;
                for (const auto& r : fusion_regions) {
                    auto trained = train(kernel_named(kernels, r), split.train, train_y, options.svr);
                    fold.svr_converged = fold.svr_converged && trained.status.converged;
                    models.push_back(std::move(trained.model));
                }
                auto region_predictions = [&](const std::string& id) {
                    RegionPredictions p{};
                    for (std::size_t r = 0; r < 4; ++r) {
                        p[r] = predict(models[r], kernel_named(kernels, fusion_regions[r]), id);
                    }
                    return p;
                };
                std::vector<RegionPredictions> val_regions;
                for (const auto& id : split.validation) val_regions.push_back(region_predictions(id));
                const auto grid = default_weight_grid();
                const auto weights = grid_search_weights(val_regions, fold_val_y, grid, options.post);
                fold.weights = weights;
                for (const auto& p : val_regions) {
                    fold_val_hat.push_back(options.post(late_fuse(p, weights)));
                }
                for (const auto& id : split.test) {
                    fold_test_hat.push_back(options.post(late_fuse(region_predictions(id), weights)));
                }
            }
            fold.validation_mae = fold_val_y.empty() ? 0.0 : mae(fold_val_y, fold_val_hat);
            val_y.insert(val_y.end(), fold_val_y.begin(), fold_val_y.end());
            val_hat.insert(val_hat.end(), fold_val_hat.begin(), fold_val_hat.end());
            for (std::size_t i = 0; i < split.test.size(); ++i) {
                const auto& id = split.test[i];
                const auto& seq = info.at(id);
                report.predictions.push_back(
                    {id, seq.subject, seq.label, fold_test_hat[i], fold.fold});
                test_y.push_back(seq.label);
                test_hat.push_back(fold_test_hat[i]);
                base_hat.push_back(options.post(fold.baseline_prediction));
            }
        } catch (const std::exception& e) {
            std::string subjects;
            for (const auto& s : fold.test_subjects) subjects += (subjects.empty() ? "" : ",") + s;
            throw Error("fold " + std::to_string(f) + " (test subjects " + subjects +
                        "): " + e.what());
        }
        report.folds.push_back(std::move(fold));
    }
    if (test_y.empty()) throw Error("protocol: no test predictions");
    report.mae = mae(test_y, test_hat);
    report.rmse = rmse(test_y, test_hat);
    report.baseline_mae = mae(test_y, base_hat);
    report.validation_mae = val_y.empty() ? 0.0 : mae(val_y, val_hat);
    report.per_intensity = per_intensity_mae(test_y, test_hat);
    for (const auto& s : dataset) {
        if (s.augmented) {
            report.augmented = true;
            break;
        }
    }
    return report;
}

GridSearchResult grid_search_hyperparams(const Dataset& dataset, const std::vector<Split>& splits,
                                         std::vector<double> sigma_grid,
                                         std::vector<FittingLambda> lambda_grid,
                                         std::vector<double> sampling_grid,
                                         const KernelProvider& provider,
                                         const ProtocolOptions& options) {
    if (sigma_grid.empty() || lambda_grid.empty() || sampling_grid.empty()) {
        throw Error("grid_search_hyperparams: empty grid");
    }
    std::sort(sigma_grid.begin(), sigma_grid.end());
    std::sort(lambda_grid.begin(), lambda_grid.end(), lambda_less);
    std::sort(sampling_grid.begin(), sampling_grid.end());

    GridSearchResult result;
    double best = std::numeric_limits<double>::infinity();
    for (double sigma : sigma_grid) {
        for (const auto& lambda : lambda_grid) {
            for (double sampling : sampling_grid) {
                const auto kernels = provider(sigma, lambda, sampling);
                const auto report = run_protocol(dataset, splits, kernels, options);
                result.table.push_back({sigma, lambda, sampling, report.validation_mae, report.mae});
                if (report.validation_mae < best) {
                    best = report.validation_mae;
                    result.best = result.table.size() - 1;
                }
            }
        }
    }
    return result;
}

FusionWeights consensus_weights(const std::vector<FoldReport>& folds) {
    std::map<std::array<double, 4>, int> votes;
    for (const auto& f : folds) {
        if (f.weights) ++votes[f.weights->values];
    }
    if (votes.empty()) return {};
    FusionWeights best;
    int best_votes = 0;
    for (const auto& [w, v] : votes) {
        if (v > best_votes) {
            best_votes = v;
            best.values = w;
        }
    }
    return best;
}

}  // namespace gramtraj
