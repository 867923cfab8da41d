// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances are fixed here and never relaxed at run time.

#include "gramtraj/dataset_io.hpp"
#include "gramtraj/synth.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace gramtraj;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

Eigen::MatrixXd local_kernels(const Eigen::MatrixXd& d, double sigma) {
    Eigen::MatrixXd k(d.rows(), d.cols());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            const double kt = 0.5 * std::exp(-d(i, j) / (sigma * sigma));
            k(i, j) = kt / (1.0 - kt);
        }
    }
    return k;
}

double min_eig_ratio(const Eigen::MatrixXd& k) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd random_psd(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    return a * a.transpose() / n;
}

// ------------------------------------------------------------------ AC1
Outcome closed_form_distance() {
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> rows(2, 40);
    std::vector<std::pair<FeatureFactor, FeatureFactor>> pairs;
    for (int i = 0; i < 1000; ++i) {
        const int m = rows(rng);
        pairs.emplace_back(FeatureFactor(testing::random_factor(rng, m)),
                           FeatureFactor(testing::random_factor(rng, m)));
    }
    const auto start = Clock::now();
    std::vector<double> ours;
    for (const auto& [a, b] : pairs) ours.push_back(distance_squared(a, b));
    const double elapsed = seconds_since(start);

    const oracle::AngleGrid grid(1000000);
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double ref = oracle::rotation_grid_min(pairs[i].first.matrix(),
                                                     pairs[i].second.matrix(), grid);
        worst = std::max(worst, std::abs(ours[i] - ref));
    }
    return {worst <= 1e-6 && elapsed < 10.0,
            "max |d2 - grid min| = " + fmt(worst) + " (<= 1e-6), closed form " + fmt(elapsed) +
                " s (< 10 s)"};
}

// ------------------------------------------------------------------ AC2
Outcome isometry_invariance() {
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> angle(0.0, 6.28), shift(-50.0, 50.0);
    const auto regions = RegionMap::standard(68);
    const TrajectoryOptions opts;
    double invariant = 0.0;
    double reflected = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = testing::random_sequence(rng, 8, 68, "a");
        const auto b = testing::random_sequence(rng, 9, 68, "b");
        auto moved = a;
        const Eigen::Matrix2d r = testing::rotation(angle(rng));
        const Eigen::RowVector2d t(shift(rng), shift(rng));
        for (auto& f : moved.frames) f = (f * r.transpose()).rowwise() + t;
        const auto mirrored = flip_augment(a);

        const auto ta = build_trajectories(a, regions, opts);
        const auto tb = build_trajectories(b, regions, opts);
        const auto tm = build_trajectories(moved, regions, opts);
        const auto tf = build_trajectories(mirrored, regions, opts);
        double change = 0.0;
        for (const auto& [name, traj] : ta) {
            const auto base = pairwise_distance_matrix(traj, tb.at(name), DistanceMode::metric);
            const auto rot = pairwise_distance_matrix(tm.at(name), tb.at(name), DistanceMode::metric);
            const auto ref = pairwise_distance_matrix(tf.at(name), tb.at(name), DistanceMode::metric);
            invariant = std::max(invariant, (base - rot).cwiseAbs().maxCoeff());
            change = std::max(change, (base - ref).cwiseAbs().maxCoeff());
        }
        reflected = std::min(reflected, change);
    }
    return {invariant < 1e-9 && reflected > 1e-3,
            "rigid motion changes distances by " + fmt(invariant) +
                " (< 1e-9); reflection changes them by >= " + fmt(reflected) + " (> 1e-3)"};
}

// ------------------------------------------------------------------ AC3
Outcome alignment_kernel() {
    std::mt19937_64 rng(1003);
    const double sigma = 0.7;
    double worst_enum = 0.0;
    std::uniform_int_distribution<int> short_len(1, 6), long_len(1, 20);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testing::random_trajectory(rng, short_len(rng), 6, 0.15);
        const auto b = testing::random_trajectory(rng, short_len(rng), 6, 0.15);
        const auto d = pairwise_distance_matrix(a, b, DistanceMode::squared);
        const double ref = oracle::path_enumeration(local_kernels(d, sigma));
        const double ours = std::exp(log_gak_similarity(a, b, sigma));
        worst_enum = std::max(worst_enum, std::abs(ours - ref) / ref);
    }
    double worst_direct = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testing::random_trajectory(rng, long_len(rng), 6, 0.15);
        const auto b = testing::random_trajectory(rng, long_len(rng), 6, 0.15);
        const auto d = pairwise_distance_matrix(a, b, DistanceMode::squared);
        const double ref = oracle::direct_alignment(local_kernels(d, sigma));
        const double ours = std::exp(log_gak_similarity(a, b, sigma));
        worst_direct = std::max(worst_direct, std::abs(ours - ref) / ref);
    }
    return {worst_enum <= 1e-9 && worst_direct <= 1e-6,
            "vs path enumeration " + fmt(worst_enum) + " rel (<= 1e-9); log vs direct table " +
                fmt(worst_direct) + " rel (<= 1e-6)"};
}

// ------------------------------------------------------------------ AC4
Outcome kernel_psd() {
    const auto data = synthesize(testing::small_synth(6, 5), 1004);
    ExperimentConfig c;
    const auto kernels = compute_kernels(data, c, {"jaw", "nose", "mouth", "eyes"});
    std::vector<SimilarityMatrix> parts;
    double worst = std::numeric_limits<double>::infinity();
    std::string detail;
    for (const auto& name : fusion_regions) {
        parts.push_back(kernels.at(name));
        const double r = min_eig_ratio(kernels.at(name).values);
        worst = std::min(worst, r);
        detail += name + " " + fmt(r) + ", ";
    }
    const double early = min_eig_ratio(early_fuse(parts).values);
    worst = std::min(worst, early);
    detail += "early " + fmt(early);
    return {data.size() == 30 && worst >= -1e-8,
            "min eig / max eig over 30 sequences: " + detail + " (>= -1e-8)"};
}

// ------------------------------------------------------------------ AC5
Outcome svr_oracle() {
    std::mt19937_64 rng(1005);
    std::uniform_int_distribution<int> size(2, 10);
    std::uniform_real_distribution<double> label(0.0, 4.0);
    // The comparison measures whether SMO reaches the QP optimum, so the solver
    // is run well below the 1e-3 match tolerance (at the default stopping
    // tolerance of 1e-3 the agreement is itself of order 1e-3). The gap at the
    // default tolerance is reported alongside.
    SvrParameters p;
    const double default_tol = p.tol;
    p.tol = 1e-6;
    double worst = 0.0, worst_default = 0.0, worst_kkt = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = size(rng);
        const auto k = random_psd(rng, n);
        std::vector<double> y(n);
        for (auto& v : y) v = label(rng);
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
        const auto ref = oracle::svr_projected_gradient(k, yv, p.C, p.epsilon, 1e-8);
        worst_kkt = std::max(worst_kkt, ref.kkt);
        const Eigen::VectorXd theirs = (k * ref.beta).array() + ref.bias;
        for (double tol : {p.tol, default_tol}) {
            auto q = p;
            q.tol = tol;
            const auto r = train(k, y, q);
            const Eigen::VectorXd ours = (k * r.model.beta).array() + r.model.bias;
            auto& w = tol == p.tol ? worst : worst_default;
            w = std::max(w, (ours - theirs).cwiseAbs().maxCoeff());
        }
    }
    SvrParameters hard;  // default stopping tolerance
    hard.C = 1e6;
    hard.epsilon = 0.5;
    double excess = -hard.epsilon;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = size(rng);
        const auto k = random_psd(rng, n);
        std::vector<double> y(n);
        for (auto& v : y) v = label(rng);
        const auto r = train(k, y, hard);
        for (int i = 0; i < n; ++i) {
            double f = r.model.bias;
            for (int j = 0; j < n; ++j) f += r.model.beta(j) * k(i, j);
            excess = std::max(excess, std::abs(y[i] - f) - hard.epsilon);
        }
    }
    return {worst <= 1e-3 && worst_kkt <= 1e-8 && excess <= 1e-3,
            "max-norm gap to QP oracle " + fmt(worst) + " at solver tol 1e-6 (<= 1e-3; " +
                fmt(worst_default) + " at default tol 1e-3; oracle KKT " + fmt(worst_kkt) +
                "); C = 1e6, eps = 0.5 max residual - eps " + fmt(excess) + " (<= 1e-3)"};
}

// ------------------------------------------------------------------ AC6
Outcome curve_fitting_limits() {
    std::mt19937_64 rng(1006);
    double worst = 0.0;
    bool monotone = true;
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = testing::random_trajectory(rng, 6 + trial, 10, 0.2);
        const auto r = resample(fit(t, 1e6));
        for (std::size_t i = 0; i < t.size(); ++i) {
            worst = std::max(worst, distance(r.points[i], t.points[i]));
        }
        double previous = std::numeric_limits<double>::infinity();
        for (double lambda : {10.0, 100.0, 1000.0}) {
            const auto f = resample(fit(t, lambda));
            double e = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) e += distance_squared(f.points[i], t.points[i]);
            if (e > previous) monotone = false;
            previous = e;
        }
    }
    return {worst <= 1e-3 && monotone,
            "lambda = 1e6 max data distance " + fmt(worst) + " (<= 1e-3); error non-increasing in " +
                "{10, 100, 1000}: " + (monotone ? "yes" : "no")};
}

// ------------------------------------------------------------------ AC7
Outcome protocol_integrity() {
    const auto raw = synthesize(testing::small_synth(9, 4), 1007);
    const auto data = augment_minority_classes(raw, ExplicitLabels{{3, 4}});
    std::map<std::string, const RawSequence*> by_id;
    for (const auto& s : data) by_id[s.sequence_id] = &s;
    ExperimentConfig c;
    c.sampling = 0.5;
    const auto kernels = compute_kernels(data, c, {"face"});
    ProtocolOptions o;
    o.strategy = Strategy::whole_face;
    int runs = 0;
    bool ok = true;
    for (const auto& splits : std::vector<std::vector<Split>>{loso_splits(data), kfold_splits(data, 3)}) {
        for (const auto& sp : splits) {
            std::set<std::string> train, val, test;
            for (const auto& id : sp.train) train.insert(by_id.at(id)->subject_id);
            for (const auto& id : sp.validation) val.insert(by_id.at(id)->subject_id);
            for (const auto& id : sp.test) {
                test.insert(by_id.at(id)->subject_id);
                if (by_id.at(id)->augmented) ok = false;
            }
            for (const auto& s : test) ok = ok && !train.count(s) && !val.count(s);
            for (const auto& s : val) ok = ok && !train.count(s);
        }
        const auto report = run_protocol(data, splits, kernels, o);
        std::map<std::string, int> tested;
        for (const auto& p : report.predictions) ++tested[p.sequence_id];
        for (const auto& s : raw) ok = ok && tested[s.sequence_id] == 1;
        ok = ok && tested.size() == raw.size();
        ++runs;
    }
    return {ok && runs == 2, "LOSO and 3-subject-block k-fold: subject-disjoint splits, every "
                             "sequence tested exactly once: " +
                                 std::string(ok ? "yes" : "no")};
}

// -------------------------------------------------------------- AC8 + AC9
struct EndToEnd {
    GridSearchResult grid;
    ExperimentReport report;
    double seconds = 0.0;
};

EndToEnd end_to_end() {
    ExperimentConfig c;  // 20 subjects x 10 sequences, 5 levels
    c.seed = 2024;
    c.protocol = Protocol::loso;
    c.label_max = c.synth.levels - 1;
    c.sigma_grid = {0.5, 0.7};
    c.lambda_grid = {std::nullopt, 100.0};
    c.sampling_grid = {0.5};
    const auto start = Clock::now();
    const auto data = synthesize(c.synth, c.seed);
    EndToEnd r;
    r.grid = run_grid_search(data, c, Strategy::late);
    const auto& best = r.grid.best_cell();
    c.sigma = best.sigma;
    c.lambda = best.lambda;
    c.sampling = best.sampling;
    r.report = run_experiment(data, c, Strategy::late);
    r.seconds = seconds_since(start);
    return r;
}

Outcome learning_signal(const EndToEnd& e) {
    const double ratio = e.report.mae / e.report.baseline_mae;
    return {ratio <= 0.6 && e.seconds < 600.0,
            "LOSO late-fusion MAE " + fmt(e.report.mae) + " vs constant-mean " +
                fmt(e.report.baseline_mae) + " = " + fmt(100 * ratio) + "% (<= 60%), run " +
                fmt(e.seconds) + " s (< 600 s)"};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

Outcome report_tables(const EndToEnd& e) {
    bool ok = true;
    // Validation grid from the run: one row per (sigma, lambda), one column per sampling rate.
    std::ostringstream run_grid;
    write_grid_table_csv(run_grid, e.grid);
    const auto g = lines(run_grid.str());
    ok = ok && g.size() == 5 && g[0] == "sigma,lambda,50%,best_sampling,best_overall" &&
         g[1].rfind("0.5,No fitting,", 0) == 0 && g[4].rfind("0.7,100,", 0) == 0;

    // Full validation layout: 3 sigmas x 4 lambdas rows, 25/50/100% columns.
    GridSearchResult full;
    for (double s : {0.5, 0.7, 0.9})
        for (FittingLambda l : {FittingLambda{}, FittingLambda{10.0}, FittingLambda{100.0},
                                FittingLambda{1000.0}})
            for (double r : {0.25, 0.5, 1.0}) full.table.push_back({s, l, r, 1.0 + s + r, 0.0});
    std::ostringstream full_grid;
    write_grid_table_csv(full_grid, full);
    const auto f = lines(full_grid.str());
    ok = ok && f.size() == 13 && f[0] == "sigma,lambda,25%,50%,100%,best_sampling,best_overall" &&
         f[1].rfind("0.5,No fitting,", 0) == 0 && f[2].rfind("0.5,10,", 0) == 0 &&
         f[12].rfind("0.9,1000,", 0) == 0;

    // Comparison tables: both protocols, all setups including augmentation.
    std::vector<ExperimentReport> reports;
    for (auto protocol : {Protocol::loso, Protocol::kfold}) {
        for (auto strategy :
             {Strategy::whole_face, Strategy::product, Strategy::early, Strategy::late}) {
            ExperimentReport r;
            r.protocol = protocol;
            r.strategy = strategy;
            r.folds.resize(protocol == Protocol::kfold ? 5 : 20);
            reports.push_back(r);
        }
        reports.back().augmented = false;
        auto aug = reports.back();
        aug.augmented = true;
        reports.push_back(aug);
    }
    reports.push_back(e.report);
    std::ostringstream cmp;
    write_comparison_csv(cmp, reports);
    const auto c = lines(cmp.str());
    const std::vector<std::string> expected_rows{
        "LOSO cross validation,Whole Face,",
        "LOSO cross validation,Cartesian product,",
        "LOSO cross validation,Early fusion,",
        "LOSO cross validation,Late fusion,",
        "LOSO cross validation,Late fusion - augmented,",
        "5-fold cross validation,Whole Face,",
        "5-fold cross validation,Cartesian product,",
        "5-fold cross validation,Early fusion,",
        "5-fold cross validation,Late fusion,",
        "5-fold cross validation,Late fusion - augmented,",
        "LOSO cross validation,Late fusion,",
    };
    ok = ok && c.size() == expected_rows.size() + 1 && c[0] == "protocol,regression_setup,mae,rmse";
    for (std::size_t i = 0; ok && i < expected_rows.size(); ++i) {
        ok = c[i + 1].rfind(expected_rows[i], 0) == 0;
    }
    ok = ok && protocol_label(Protocol::kfold, 3) == "3-fold cross validation";
    return {ok, "validation grid and protocol/setup comparison tables emitted with the expected "
                "headers and rows: " +
                    std::string(ok ? "yes" : "no") +
                    " (dataset-specific error figures need the original datasets)"};
}

// ----------------------------------------------------------------- AC10
Outcome fusion_arithmetic() {
    const double late = late_fuse({4.0, 4.0, 4.0, 4.0}, FusionWeights{{0.39, 0.56, 0.88, 0.94}});
    std::vector<SimilarityMatrix> ks;
    for (double v : {1.0, 2.0, 3.0, 4.0}) {
        ks.push_back({{"a", "b"}, Eigen::MatrixXd::Constant(2, 2, v), "r", 0.7});
    }
    const double early = early_fuse(ks).values(0, 1);
    return {late == 2.77 && early == 2.5,
            "late_fuse = " + format_decimal(late) + " (== 2.77), early_fuse = " +
                format_decimal(early) + " (== 2.5)"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        const auto start = Clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << name << " " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << " ["
                  << fmt(seconds_since(start)) << " s]" << std::endl;
    };
    report("AC1", closed_form_distance);
    report("AC2", isometry_invariance);
    report("AC3", alignment_kernel);
    report("AC4", kernel_psd);
    report("AC5", svr_oracle);
    report("AC6", curve_fitting_limits);
    report("AC7", protocol_integrity);
    std::optional<EndToEnd> e;
    std::string e2e_error;
    try {
        e = end_to_end();
    } catch (const std::exception& ex) {
        e2e_error = ex.what();
    }
    report("AC8", [&] {
        if (!e) throw Error(e2e_error);
        return learning_signal(*e);
    });
    report("AC9", [&] {
        if (!e) throw Error(e2e_error);
        return report_tables(*e);
    });
    report("AC10", fusion_arithmetic);
    std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria"
              << std::endl;
    return failures ? 1 : 0;
}
