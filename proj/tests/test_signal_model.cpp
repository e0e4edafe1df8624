#include <doctest.h>

#include <cmath>

#include "ssrecon/signal_model.hpp"

using namespace ssrecon;

TEST_CASE("orthonormal basis: square case is orthogonal") {
    const Eigen::MatrixXd u = random_orthonormal_basis(3, 3, 42);
    const Eigen::MatrixXd gram = u.transpose() * u;
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("orthonormal basis: single column has unit norm") {
    const Eigen::MatrixXd u = random_orthonormal_basis(5, 1, 9);
    CHECK(std::abs(u.col(0).norm() - 1.0) <= 1e-12);
}

TEST_CASE("orthonormal basis: n=100 d=10 Gram matrix") {
    const Eigen::MatrixXd u = random_orthonormal_basis(100, 10, 0);
    const Eigen::MatrixXd gram = u.transpose() * u;
    double max_off = 0;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            if (i != j) max_off = std::max(max_off, std::abs(gram(i, j)));
    CHECK(max_off < 1e-10);
    CHECK((gram.diagonal().array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("orthonormal basis: deterministic given seed, sensitive to seed") {
    const Eigen::MatrixXd a = random_orthonormal_basis(30, 7, 5);
    const Eigen::MatrixXd b = random_orthonormal_basis(30, 7, 5);
    const Eigen::MatrixXd c = random_orthonormal_basis(30, 7, 6);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("orthonormal basis: invalid dimensions") {
    CHECK_THROWS_AS(random_orthonormal_basis(3, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(random_orthonormal_basis(3, 0, 0), std::invalid_argument);
}

TEST_CASE("sample_pair: zero noise collapses measurements onto the signal") {
    const SubspaceModel noiseless_input = SubspaceModel::make(20, 4, 0.0, 0.3, 1);
    GaussianStream g1(substream(2, 0));
    const SamplePair p1 = sample_pair(noiseless_input, g1);
    CHECK(p1.y == p1.x);

    const SubspaceModel noiseless_target = SubspaceModel::make(20, 4, 0.3, 0.0, 1);
    GaussianStream g2(substream(2, 0));
    const SamplePair p2 = sample_pair(noiseless_target, g2);
    CHECK(p2.y_prime == p2.x);
}

TEST_CASE("sample_pair: signal statistics over 1e5 draws") {
    const SubspaceModel model = SubspaceModel::make(100, 10, 0.1, 0.1, 3);
    const int count = 100000;
    double sum_x_sq = 0, ss_x_sq = 0, sum_z_sq = 0, ss_z_sq = 0;
    double worst_residual = 0;
    Eigen::MatrixXd coeff_cov = Eigen::MatrixXd::Zero(10, 10);
    Eigen::VectorXd coeff_mean = Eigen::VectorXd::Zero(10);
    for (int i = 0; i < count; ++i) {
        const SamplePair pair = sample_pair_at(model, 77, i);
        const double x_sq = pair.x.squaredNorm();
        const double z_sq = (pair.y - pair.x).squaredNorm();
        sum_x_sq += x_sq;
        ss_x_sq += x_sq * x_sq;
        sum_z_sq += z_sq;
        ss_z_sq += z_sq * z_sq;
        const Eigen::VectorXd c = model.basis.transpose() * pair.x;
        coeff_mean += c;
        coeff_cov += c * c.transpose();
        worst_residual = std::max(worst_residual, (pair.x - model.basis * c).norm());
    }
    const double mean_x_sq = sum_x_sq / count;
    const double se_x = std::sqrt((ss_x_sq / count - mean_x_sq * mean_x_sq) / count);
    CHECK(std::abs(mean_x_sq - 1.0) < 3 * se_x);  // E||x||^2 = 1

    const double mean_z_sq = sum_z_sq / count;
    const double se_z = std::sqrt((ss_z_sq / count - mean_z_sq * mean_z_sq) / count);
    CHECK(std::abs(mean_z_sq - 0.01) < 3 * se_z);  // E||z||^2 = sigma_z^2

    // x never leaves the span of U.
    CHECK(worst_residual < 1e-9);

    // Coefficients: mean ~ 0 per coordinate, covariance ~ I/d.
    coeff_mean /= count;
    coeff_cov /= count;
    const double coord_se = std::sqrt(0.1 / count);
    CHECK(coeff_mean.cwiseAbs().maxCoeff() < 4 * coord_se);
    const Eigen::MatrixXd cov_err = coeff_cov - 0.1 * Eigen::MatrixXd::Identity(10, 10);
    CHECK(cov_err.cwiseAbs().maxCoeff() < 5.0 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("nested datasets share prefixes and are deterministic") {
    const SubspaceModel model = SubspaceModel::make(12, 3, 0.1, 0.2, 4);
    const auto sets = generate_nested_datasets(model, {10, 100}, 7);
    REQUIRE(sets.size() == 2);
    REQUIRE(sets[0].size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(sets[0].pairs[i].x == sets[1].pairs[i].x);
        CHECK(sets[0].pairs[i].y == sets[1].pairs[i].y);
        CHECK(sets[0].pairs[i].y_prime == sets[1].pairs[i].y_prime);
    }

    const auto again = generate_nested_datasets(model, {10, 100}, 7);
    for (int i = 0; i < 100; ++i) CHECK(again[1].pairs[i].y == sets[1].pairs[i].y);

    const auto other_seed = generate_nested_datasets(model, {10}, 8);
    CHECK(other_seed[0].pairs[0].y != sets[0].pairs[0].y);
}

TEST_CASE("nested datasets: argument validation") {
    const SubspaceModel model = SubspaceModel::make(8, 2, 0.1, 0.1, 4);
    CHECK_THROWS_AS(generate_nested_datasets(model, {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_nested_datasets(model, {10, 10}, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_nested_datasets(model, {10, 5}, 0), std::invalid_argument);
}

TEST_CASE("sample_block matches the stored dataset bitwise") {
    const SubspaceModel model = SubspaceModel::make(16, 5, 0.2, 0.3, 11);
    const Dataset ds = make_dataset(model, 37, 123);
    Eigen::MatrixXd x(16, 17), y(16, 17), e_unit(16, 17);
    sample_block(model, 123, 20, x, y, e_unit);
    const double e_scale = model.sigma_e / std::sqrt(16.0);
    for (int j = 0; j < 17; ++j) {
        CHECK(x.col(j) == ds.pairs[20 + j].x);
        CHECK(y.col(j) == ds.pairs[20 + j].y);
        const Eigen::VectorXd y_prime = x.col(j) + e_scale * e_unit.col(j);
        CHECK(y_prime == ds.pairs[20 + j].y_prime);
    }
}
