#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace gramtraj;

namespace {

Eigen::MatrixXd random_psd(std::mt19937_64& rng, int n, int rank) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) a(i, j) = g(rng);
    return a * a.transpose() / rank;
}

std::vector<double> random_labels(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 4.0);
    std::vector<double> y(n);
    for (auto& v : y) v = u(rng);
    return y;
}

Eigen::VectorXd fitted(const Eigen::MatrixXd& k, const SvrModel& m) {
    return (k * m.beta).array() + m.bias;
}

}  // namespace

TEST_CASE("SMO matches the projected-gradient oracle") {
    std::mt19937_64 rng(51);
    SvrParameters p;
    p.tol = 1e-6;
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 3 + trial % 6;
        const auto k = random_psd(rng, n, n);
        const auto y = random_labels(rng, n);
        const auto result = train(k, y, p);
        REQUIRE(result.status.converged);
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
        const auto ref = oracle::svr_projected_gradient(k, yv, p.C, p.epsilon);
        CHECK(ref.kkt <= 1e-8);
        const Eigen::VectorXd ours = fitted(k, result.model);
        const Eigen::VectorXd theirs = (k * ref.beta).array() + ref.bias;
        CHECK((ours - theirs).cwiseAbs().maxCoeff() < 1e-3);
        CHECK(dual_objective(k, y, result.model.beta, p.epsilon) ==
              doctest::Approx(dual_objective(k, y, ref.beta, p.epsilon)).epsilon(1e-5));
    }
}

TEST_CASE("dual feasibility and monotone objective") {
    std::mt19937_64 rng(52);
    const auto k = random_psd(rng, 12, 5);
    const auto y = random_labels(rng, 12);
    SvrParameters p;
    p.C = 0.5;
    const auto r = train(k, y, p, true);
    CHECK(r.status.converged);
    CHECK(std::abs(r.model.beta.sum()) < 1e-10);
    CHECK(r.model.beta.cwiseAbs().maxCoeff() <= p.C + 1e-12);
    const auto& trace = r.status.objective_trace;
    REQUIRE(!trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-12);
    CHECK(trace.back() == doctest::Approx(dual_objective(k, y, r.model.beta, p.epsilon)));
}

TEST_CASE("epsilon tube with a very large C") {
    std::mt19937_64 rng(53);
    SvrParameters p;
    p.C = 1e6;
    p.epsilon = 0.5;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + trial % 7;
        const Eigen::MatrixXd k = random_psd(rng, n, n) + 0.1 * Eigen::MatrixXd::Identity(n, n);
        const auto y = random_labels(rng, n);
        const auto r = train(k, y, p);
        REQUIRE(r.status.converged);
        const Eigen::VectorXd f = fitted(k, r.model);
        for (int i = 0; i < n; ++i) CHECK(std::abs(y[i] - f(i)) <= p.epsilon + p.tol);
    }
}

TEST_CASE("labels inside the tube give a flat model") {
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(4, 4);
    const std::vector<double> y{2.0, 2.05, 1.95, 2.0};
    const auto r = train(k, y, SvrParameters{});
    CHECK(r.model.beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(r.model.bias - 2.0) <= 0.1);
}

TEST_CASE("kernel checks and PSD shift") {
    const std::vector<double> y{0.0, 1.0};
    Eigen::Matrix2d asym;
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(train(asym, y, {}), Error);
    Eigen::Matrix2d indefinite;
    indefinite << 1, 2, 2, 1;
    CHECK_THROWS_AS(train(indefinite, y, {}), Error);
    Eigen::Matrix2d nearly;
    nearly << 1, 1 + 1e-9, 1 + 1e-9, 1;  // eigenvalues 2 + 1e-9 and -1e-9
    const auto r = train(nearly, y, {});
    CHECK(r.status.diagonal_shift == doctest::Approx(1e-9).epsilon(1e-3));
    CHECK_THROWS_AS(train(Eigen::MatrixXd::Identity(3, 3), y, {}), Error);
    Eigen::Matrix2d nan = Eigen::Matrix2d::Identity();
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(train(nan, y, {}), Error);
    SvrParameters bad;
    bad.C = 0.0;
    CHECK_THROWS_AS(train(Eigen::Matrix2d::Identity(), y, bad), Error);
}

TEST_CASE("training on a named sub-kernel") {
    std::mt19937_64 rng(54);
    SimilarityMatrix s;
    s.ids = {"a", "b", "c", "d", "e"};
    s.values = random_psd(rng, 5, 5);
    s.region = "mouth";
    const std::vector<std::string> ids{"d", "a", "e"};
    const std::vector<double> y{1.0, 3.0, 2.0};
    const auto r = train(s, ids, y, SvrParameters{});
    CHECK(r.model.training_ids == ids);
    CHECK(r.model.region == "mouth");
    const double expected = r.model.bias + r.model.beta(0) * s.values(2, 3) +
                            r.model.beta(1) * s.values(2, 0) + r.model.beta(2) * s.values(2, 4);
    CHECK(predict(r.model, s, "c") == doctest::Approx(expected));
    CHECK_THROWS_AS(predict(r.model, std::vector<double>{1.0}), Error);
    CHECK(clamp_prediction(11.0, 0.0, 10.0) == 10.0);
    CHECK(clamp_prediction(-1.0, 0.0, 10.0) == 0.0);
}
