#include <doctest.h>

#include <cmath>

#include "ssrecon/linear_denoise.hpp"
#include "ssrecon/monte_carlo.hpp"

using namespace ssrecon;

namespace {

// Canonical model of the simulations: n=100, d=10, sigma_z=0.1.
SubspaceModel canonical(double sigma_e = 0.1) {
    return SubspaceModel::make(100, 10, 0.1, sigma_e, 2024);
}

LinearEstimator random_estimator(int n, std::uint64_t seed, double scale = 1.0) {
    GaussianStream g(substream(seed, 99));
    LinearEstimator est = LinearEstimator::zero(n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) est.W(i, j) = scale * g();
    return est;
}

}  // namespace

TEST_CASE("risk closed form: zero and identity estimators") {
    const SubspaceModel model = canonical();
    CHECK(risk_closed_form(LinearEstimator::zero(100), model) == doctest::Approx(1.0));
    LinearEstimator identity{Eigen::MatrixXd::Identity(100, 100)};
    CHECK(risk_closed_form(identity, model) == doctest::Approx(0.01));
}

TEST_CASE("risk at the optimal estimator, two closed-form routes plus Monte Carlo") {
    const SubspaceModel model = canonical();
    // a/(1+a) with a = sigma_z^2 d/n = 1/1000, evaluated exactly.
    const double frozen = 0.000999000999000999;
    CHECK(optimal_risk(model) == doctest::Approx(frozen).epsilon(1e-12));
    const LinearEstimator w_star = optimal_estimator(model);
    CHECK(risk_closed_form(w_star, model) == doctest::Approx(frozen).epsilon(1e-9));

    const McEstimate mc = mc_risk(w_star, model, Target::Clean, 1000000, 555);
    CHECK(std::abs(mc.mean - frozen) < 3 * mc.std_error);
}

TEST_CASE("optimal estimator: shrinkage structure") {
    const SubspaceModel noiseless = SubspaceModel::make(30, 6, 0.0, 0.0, 5);
    const Eigen::MatrixXd projector = noiseless.basis * noiseless.basis.transpose();
    CHECK((optimal_estimator(noiseless).W - projector).cwiseAbs().maxCoeff() < 1e-12);

    // d = n: U U' = I, so W* = I/(1+sigma_z^2).
    const SubspaceModel full = SubspaceModel::make(8, 8, 0.3, 0.0, 5);
    const Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(8, 8) / 1.09;
    CHECK((optimal_estimator(full).W - expected).cwiseAbs().maxCoeff() < 1e-12);

    const SubspaceModel model = canonical();
    const LinearEstimator w_star = optimal_estimator(model);
    const Eigen::MatrixXd p = model.basis * model.basis.transpose();
    CHECK((w_star.W - p / 1.001).cwiseAbs().maxCoeff() < 1e-14);

    // Stationarity and local optimality.
    CHECK(risk_gradient(w_star, model).cwiseAbs().maxCoeff() < 1e-9);
    const double r_star = risk_closed_form(w_star, model);
    GaussianStream g(substream(31, 0));
    for (int trial = 0; trial < 100; ++trial) {
        LinearEstimator perturbed = w_star;
        for (int j = 0; j < 100; ++j)
            for (int i = 0; i < 100; ++i) perturbed.W(i, j) += 1e-3 * g();
        CHECK(risk_closed_form(perturbed, model) >= r_star);
    }
}

TEST_CASE("risk gradient: plug-in case and finite differences") {
    const SubspaceModel model = canonical();
    const Eigen::MatrixXd at_zero = risk_gradient(LinearEstimator::zero(100), model);
    const Eigen::MatrixXd expected =
        -(2.0 / 10) * (model.basis * model.basis.transpose());
    CHECK((at_zero - expected).cwiseAbs().maxCoeff() < 1e-14);

    const SubspaceModel small = SubspaceModel::make(20, 4, 0.1, 0.1, 8);
    const LinearEstimator est = random_estimator(20, 3, 0.4);
    const Eigen::MatrixXd grad = risk_gradient(est, small);
    Xoshiro256pp pick = substream(5, 1);
    const double h = 1e-6;
    for (int c = 0; c < 50; ++c) {
        const int i = static_cast<int>(pick() % 20);
        const int j = static_cast<int>(pick() % 20);
        LinearEstimator plus = est, minus = est;
        plus.W(i, j) += h;
        minus.W(i, j) -= h;
        const double fd =
            (risk_closed_form(plus, small) - risk_closed_form(minus, small)) / (2 * h);
        CHECK(std::abs(fd - grad(i, j)) <=
              1e-6 * std::max(1.0, std::abs(grad(i, j))));
    }
}

TEST_CASE("n2n sample gradient: exact outer-product cases") {
    const SubspaceModel model = SubspaceModel::make(10, 2, 0.1, 0.1, 6);
    const SamplePair pair = sample_pair_at(model, 9, 0);

    // Zero residual: y' = W y.
    LinearEstimator est = random_estimator(10, 12, 0.5);
    SamplePair aligned = pair;
    aligned.y_prime = est.W * pair.y;
    CHECK(n2n_sample_gradient(est, aligned).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::MatrixXd at_zero =
        n2n_sample_gradient(LinearEstimator::zero(10), pair);
    const Eigen::MatrixXd expected = -2.0 * pair.y_prime * pair.y.transpose();
    CHECK((at_zero - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("n2n sample gradient is an unbiased estimate of the risk gradient") {
    const SubspaceModel model = canonical();
    LinearEstimator est = optimal_estimator(model);
    est.W *= 0.6;
    const GradientMeanResult r = mc_n2n_gradient_mean(est, model, 100000, 404);
    CHECK(r.holds());
}

TEST_CASE("empirical risk: targets and identities") {
    const SubspaceModel clean_model = SubspaceModel::make(15, 3, 0.0, 0.0, 7);
    const Dataset ds = make_dataset(clean_model, 25, 1);
    LinearEstimator identity{Eigen::MatrixXd::Identity(15, 15)};
    CHECK(empirical_risk(identity, ds, Target::Clean) == 0.0);
    // sigma_e = 0 makes the noisy target the clean one.
    CHECK(empirical_risk(identity, ds, Target::Noisy) ==
          empirical_risk(identity, ds, Target::Clean));

    CHECK_THROWS_AS(empirical_risk(identity, Dataset{clean_model, 0, {}}, Target::Clean),
                    std::invalid_argument);
}

TEST_CASE("Proposition 1 identity at the optimal estimator (1e6 pairs)") {
    const SubspaceModel model = canonical(0.1);
    const LinearEstimator w_star = optimal_estimator(model);
    // E||W y - y'||^2 = E||W y - x||^2 + sigma_e^2.
    const McEstimate noisy = mc_risk(w_star, model, Target::Noisy, 1000000, 606);
    const double expected = 0.000999000999000999 + 0.01;
    CHECK(std::abs(noisy.mean - expected) < 3 * noisy.std_error);

    const Prop1Result prop1 = mc_prop1_check(w_star, model, 1000000, 707);
    CHECK(prop1.holds());
}

TEST_CASE("noisier2noise population estimator: eigenstructure and risk gap") {
    // Noiseless regression: projection, nothing off-subspace.
    const SubspaceModel noiseless = SubspaceModel::make(12, 3, 0.0, 0.0, 13);
    const Eigen::MatrixXd projector = noiseless.basis * noiseless.basis.transpose();
    CHECK((noisier2noise_population_estimator(noiseless, 0.0).W - projector)
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    const SubspaceModel model = canonical();
    const LinearEstimator w_nr = noisier2noise_population_estimator(model, 0.1);

    // Shared-eigenbasis values, frozen from exact rational arithmetic.
    const double on_subspace = 0.999001996007984;
    const double off_subspace = 0.5;
    const Eigen::MatrixXd p = model.basis * model.basis.transpose();
    const Eigen::MatrixXd expected =
        off_subspace * Eigen::MatrixXd::Identity(100, 100) +
        (on_subspace - off_subspace) * p;
    CHECK((w_nr.W - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Oracle route: solve the population least-squares directly.
    const Eigen::MatrixXd a1 =
        p / 10.0 + (0.01 / 100) * Eigen::MatrixXd::Identity(100, 100);
    const Eigen::MatrixXd a2 =
        p / 10.0 + (0.02 / 100) * Eigen::MatrixXd::Identity(100, 100);
    const Eigen::MatrixXd w_oracle = a2.ldlt().solve(a1).transpose();
    CHECK((w_nr.W - w_oracle).cwiseAbs().maxCoeff() < 1e-10);

    // Inference risk on y = x + z: the persistent gap to R(W*).
    const double frozen_risk = 0.003249000999996016;
    CHECK(risk_closed_form(w_nr, model) == doctest::Approx(frozen_risk).epsilon(1e-9));
    CHECK(risk_closed_form(w_nr, model) > 3.0 * optimal_risk(model));
    const McEstimate mc = mc_risk(w_nr, model, Target::Clean, 200000, 808);
    CHECK(std::abs(mc.mean - frozen_risk) < 3 * mc.std_error);
}

TEST_CASE("exact risk decomposition and derived bounds for 100 random estimators") {
    const SubspaceModel model = canonical();
    const LinearEstimator w_star = optimal_estimator(model);
    const double r_star = optimal_risk(model);
    const double sz2_over_n = 0.01 / 100;
    for (int trial = 0; trial < 100; ++trial) {
        const LinearEstimator est = random_estimator(100, 1000 + trial, 0.2);
        const double risk = risk_closed_form(est, model);
        const Eigen::MatrixXd diff = est.W - w_star.W;
        const double identity = r_star + (diff * model.basis).squaredNorm() / 10.0 +
                                sz2_over_n * diff.squaredNorm();
        CHECK(std::abs(risk - identity) < 1e-9 * risk);
        // Quadratic upper bound on the excess.
        CHECK(risk - r_star <= (0.1 + sz2_over_n) * diff.squaredNorm() * (1 + 1e-12));
        // Strong convexity floor.
        CHECK(risk >= sz2_over_n * est.W.squaredNorm());
    }
}

TEST_CASE("risk breakdown keeps excess nonnegative up to rounding") {
    const SubspaceModel model = canonical();
    for (int trial = 0; trial < 20; ++trial) {
        const RiskBreakdown b =
            risk_breakdown(random_estimator(100, 300 + trial, 0.1), model);
        CHECK(b.excess >= -1e-12);
        CHECK(b.excess == b.risk - b.optimal_risk);
    }
    CHECK(risk_breakdown(optimal_estimator(model), model).excess ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
    const SubspaceModel model = canonical();
    const LinearEstimator wrong = LinearEstimator::zero(40);
    CHECK_THROWS_AS(risk_closed_form(wrong, model), std::invalid_argument);
    CHECK_THROWS_AS(risk_gradient(wrong, model), std::invalid_argument);
}
