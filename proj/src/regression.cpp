#include "gramtraj/regression.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gramtraj {

namespace {

constexpr double tau = 1e-12;
constexpr double inf = std::numeric_limits<double>::infinity();

// Absorbs small negative eigenvalues by shifting the diagonal; rejects the
// kernel when the deficit exceeds 1e-6 of the spectral radius.
double psd_shift(const Eigen::MatrixXd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::EigenvaluesOnly);
    const double min_ev = solver.eigenvalues().minCoeff();
    const double max_ev = solver.eigenvalues().maxCoeff();
    if (min_ev >= 0.0) return 0.0;
    if (min_ev < -1e-6 * std::max(max_ev, 0.0)) {
        throw Error("svr: kernel is not positive semi-definite (min eigenvalue " +
                    std::to_string(min_ev) + ", max " + std::to_string(max_ev) + ")");
    }
    return -min_ev;
}

class Solver {
public:
    Solver(const Eigen::MatrixXd& k, std::span<const double> labels, const SvrParameters& params)
        : k_(k), n_(k.rows()), c_(params.C), alpha_(Eigen::VectorXd::Zero(2 * n_)),
          grad_(2 * n_) {
        for (Eigen::Index i = 0; i < n_; ++i) {
            grad_(i) = params.epsilon - labels[static_cast<std::size_t>(i)];
            grad_(n_ + i) = params.epsilon + labels[static_cast<std::size_t>(i)];
        }
        p_ = grad_;
    }

    double sign(Eigen::Index s) const { return s < n_ ? 1.0 : -1.0; }
    double q(Eigen::Index s, Eigen::Index t) const {
        return sign(s) * sign(t) * k_(s % n_, t % n_);
    }
    bool in_up(Eigen::Index s) const {
        return sign(s) > 0 ? alpha_(s) < c_ : alpha_(s) > 0.0;
    }
    bool in_low(Eigen::Index s) const {
        return sign(s) > 0 ? alpha_(s) > 0.0 : alpha_(s) < c_;
    }

    // Maximal violating pair; returns the gap m - M.
    double select(Eigen::Index& i, Eigen::Index& j) const {
        double g_max = -inf;
        double g_min = inf;
        i = j = -1;
        for (Eigen::Index s = 0; s < 2 * n_; ++s) {
            const double v = -sign(s) * grad_(s);
            if (in_up(s) && v > g_max) {
                g_max = v;
                i = s;
            }
            if (in_low(s) && v < g_min) {
                g_min = v;
                j = s;
            }
        }
        if (i < 0 || j < 0) return 0.0;
        return g_max - g_min;
    }

    void update(Eigen::Index i, Eigen::Index j) {
        const double old_i = alpha_(i);
        const double old_j = alpha_(j);
        const double qii = q(i, i);
        const double qjj = q(j, j);
        const double qij = q(i, j);
        double& ai = alpha_(i);
        double& aj = alpha_(j);
        if (sign(i) != sign(j)) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad_(i) - grad_(j)) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) { aj = 0.0; ai = diff; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = -diff; }
            }
            if (diff > 0.0) {
                if (ai > c_) { ai = c_; aj = c_ - diff; }
            } else {
                if (aj > c_) { aj = c_; ai = c_ + diff; }
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (grad_(i) - grad_(j)) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c_) {
                if (ai > c_) { ai = c_; aj = sum - c_; }
            } else {
                if (aj < 0.0) { aj = 0.0; ai = sum; }
            }
            if (sum > c_) {
                if (aj > c_) { aj = c_; ai = sum - c_; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = sum; }
            }
        }
        const double di = ai - old_i;
        const double dj = aj - old_j;
        for (Eigen::Index s = 0; s < 2 * n_; ++s) {
            grad_(s) += q(s, i) * di + q(s, j) * dj;
        }
    }

    // 1/2 a'Qa + p'a, minimised by the solver.
    double primal_form() const { return 0.5 * alpha_.dot(grad_ + p_); }

    double bias() const {
        double ub = inf;
        double lb = -inf;
        double sum_free = 0.0;
        int n_free = 0;
        for (Eigen::Index s = 0; s < 2 * n_; ++s) {
            const double yg = sign(s) * grad_(s);
            if (alpha_(s) >= c_) {
                if (sign(s) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
            } else if (alpha_(s) <= 0.0) {
                if (sign(s) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
        return -rho;
    }

    Eigen::VectorXd beta() const { return alpha_.head(n_) - alpha_.tail(n_); }

private:
    const Eigen::MatrixXd& k_;
    Eigen::Index n_;
    double c_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd grad_;
    Eigen::VectorXd p_;
};

}  // namespace

double dual_objective(const Eigen::MatrixXd& kernel, std::span<const double> labels,
                      const Eigen::VectorXd& beta, double epsilon) {
    const Eigen::Map<const Eigen::VectorXd> y(labels.data(), static_cast<Eigen::Index>(labels.size()));
    return -0.5 * beta.dot(kernel * beta) - epsilon * beta.lpNorm<1>() + y.dot(beta);
}

TrainResult train(const Eigen::MatrixXd& kernel, std::span<const double> labels,
                  const SvrParameters& params, bool record_objective) {
    const auto n = kernel.rows();
    if (kernel.cols() != n || static_cast<std::size_t>(n) != labels.size()) {
        throw Error("svr train: kernel is " + std::to_string(kernel.rows()) + "x" +
                    std::to_string(kernel.cols()) + " but " + std::to_string(labels.size()) +
                    " labels were given");
    }
    if (n == 0) throw Error("svr train: empty training set");
    for (double y : labels) {
        if (!std::isfinite(y)) throw Error("svr train: non-finite label");
    }
    if (!(params.C > 0.0) || !(params.epsilon >= 0.0) || !(params.tol > 0.0) ||
        params.max_iter < 1) {
        throw Error("svr train: invalid hyperparameters (need C > 0, epsilon >= 0, tol > 0)");
    }
    if (!kernel.allFinite()) throw Error("svr train: non-finite kernel entry");
    const double scale = std::max(kernel.cwiseAbs().maxCoeff(), 1e-300);
    if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw Error("svr train: kernel is not symmetric");
    }

    TrainResult result;
    const double shift = psd_shift(kernel);
    const Eigen::MatrixXd k =
        shift > 0.0 ? Eigen::MatrixXd(kernel + shift * Eigen::MatrixXd::Identity(n, n)) : kernel;
    result.status.diagonal_shift = shift;

    Solver solver(k, labels, params);
    long iter = 0;
    double gap = 0.0;
    for (; iter < params.max_iter; ++iter) {
        Eigen::Index i = 0;
        Eigen::Index j = 0;
        gap = solver.select(i, j);
        if (gap < params.tol) {
            result.status.converged = true;
            break;
        }
        solver.update(i, j);
        if (record_objective) result.status.objective_trace.push_back(-solver.primal_form());
    }
    if (!result.status.converged) {
        Eigen::Index i = 0;
        Eigen::Index j = 0;
        gap = solver.select(i, j);
        result.status.converged = gap < params.tol;
    }
    result.status.iterations = iter;
    result.status.kkt_gap = gap;
    result.model.beta = solver.beta();
    result.model.bias = solver.bias();
    result.model.params = params;
    return result;
}

TrainResult train(const SimilarityMatrix& kernel, const std::vector<std::string>& ids,
                  std::span<const double> labels, const SvrParameters& params) {
    std::vector<Eigen::Index> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids) rows.push_back(kernel.index_of(id));
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd sub(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = kernel.values(rows[a], rows[b]);
    }
    TrainResult result = train(sub, labels, params);
    result.model.training_ids = ids;
    result.model.region = kernel.region;
    return result;
}

double predict(const SvrModel& model, std::span<const double> k_row) {
    if (static_cast<Eigen::Index>(k_row.size()) != model.beta.size()) {
        throw Error("svr predict: kernel row has " + std::to_string(k_row.size()) +
                    " entries, model has " + std::to_string(model.beta.size()) +
                    " training samples");
    }
    double acc = model.bias;
    for (Eigen::Index i = 0; i < model.beta.size(); ++i) {
        acc += model.beta(i) * k_row[static_cast<std::size_t>(i)];
    }
    if (!std::isfinite(acc)) throw Error("svr predict: non-finite prediction");
    return acc;
}

double predict(const SvrModel& model, const SimilarityMatrix& kernel, const std::string& id) {
    const auto row = kernel.index_of(id);
    std::vector<double> k_row;
    k_row.reserve(model.training_ids.size());
    for (const auto& train_id : model.training_ids) {
        k_row.push_back(kernel.values(row, kernel.index_of(train_id)));
    }
    return predict(model, k_row);
}

double clamp_prediction(double value, double lo, double hi) { return std::clamp(value, lo, hi); }

}  // namespace gramtraj
