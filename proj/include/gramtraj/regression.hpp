#pragma once

#include "gramtraj/alignment.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace gramtraj {

struct SvrParameters {
    double C = 1.0;
    double epsilon = 0.1;
    double tol = 1e-3;
    long max_iter = 100000;
};

/// Precomputed-kernel epsilon-SVR: f(x) = sum_i beta_i K(x_i, x) + bias.
struct SvrModel {
    std::vector<std::string> training_ids;
    Eigen::VectorXd beta;
    double bias = 0.0;
    SvrParameters params;
    std::string region;
    /// Identifies the kernel the model was trained on (cache key hash).
    std::string provenance;
};

struct TrainStatus {
    bool converged = false;
    long iterations = 0;
    /// Final maximal KKT violation m(alpha) - M(alpha).
    double kkt_gap = 0.0;
    /// Amount added to the kernel diagonal to absorb round-off negativity.
    double diagonal_shift = 0.0;
    /// Dual objective after every pair update (when requested).
    std::vector<double> objective_trace;
};

struct TrainResult {
    SvrModel model;
    TrainStatus status;
};

/// Solves max -1/2 b'Kb - eps sum|b_i| + y'b  s.t. sum b_i = 0, |b_i| <= C
/// by SMO on the 2n-variable (alpha, alpha*) form.
TrainResult train(const Eigen::MatrixXd& kernel, std::span<const double> labels,
                  const SvrParameters& params, bool record_objective = false);

/// Trains on the sub-kernel of `kernel` restricted to `ids`.
TrainResult train(const SimilarityMatrix& kernel, const std::vector<std::string>& ids,
                  std::span<const double> labels, const SvrParameters& params);

/// `k_row[i]` is the kernel value against the model's i-th training sample.
double predict(const SvrModel& model, std::span<const double> k_row);

/// Prediction for sequence `id`, reading its kernel row from `kernel`.
double predict(const SvrModel& model, const SimilarityMatrix& kernel, const std::string& id);

double clamp_prediction(double value, double lo, double hi);

/// max -1/2 b'Kb - eps sum|b_i| + y'b for a given beta.
double dual_objective(const Eigen::MatrixXd& kernel, std::span<const double> labels,
                      const Eigen::VectorXd& beta, double epsilon);

}  // namespace gramtraj
