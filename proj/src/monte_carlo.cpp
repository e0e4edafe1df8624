#include "ssrecon/monte_carlo.hpp"

#include <cmath>
#include <stdexcept>

namespace ssrecon {

namespace {

constexpr std::int64_t kBlock = 4096;

// Running mean/variance accumulator (Welford).
struct OnlineStats {
    std::int64_t count = 0;
    double mean = 0;
    double m2 = 0;

    void add(double value) {
        ++count;
        const double delta = value - mean;
        mean += delta / count;
        m2 += delta * (value - mean);
    }

    double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
    double std_error() const { return count > 0 ? std::sqrt(variance() / count) : 0.0; }
};

void check_sample_count(std::int64_t samples) {
    if (samples < 2) throw std::invalid_argument("need at least 2 Monte Carlo samples");
}

}  // namespace

McEstimate mc_risk(const LinearEstimator& est, const SubspaceModel& model, Target target,
                   std::int64_t samples, std::uint64_t seed) {
    check_sample_count(samples);
    model.validate();
    const int n = model.n;
    const double e_scale = model.sigma_e / std::sqrt(static_cast<double>(n));

    OnlineStats stats;
    Eigen::MatrixXd x(n, kBlock), y(n, kBlock), e_unit(n, kBlock), r(n, kBlock);
    for (std::int64_t first = 0; first < samples; first += kBlock) {
        const std::int64_t b = std::min(kBlock, samples - first);
        auto xb = x.leftCols(b);
        auto yb = y.leftCols(b);
        auto eb = e_unit.leftCols(b);
        sample_block(model, seed, first, xb, yb, eb);
        r.leftCols(b).noalias() = est.W * yb;
        for (std::int64_t j = 0; j < b; ++j) {
            double sq;
            if (target == Target::Clean) {
                sq = (r.col(j) - x.col(j)).squaredNorm();
            } else {
                sq = (r.col(j) - x.col(j) - e_scale * e_unit.col(j)).squaredNorm();
            }
            stats.add(sq);
        }
    }
    return {stats.mean, stats.std_error(), samples};
}

std::vector<Prop1Result> mc_prop1_check(const std::vector<LinearEstimator>& estimators,
                                        const SubspaceModel& model, std::int64_t samples,
                                        std::uint64_t seed) {
    check_sample_count(samples);
    model.validate();
    if (estimators.empty()) return {};
    const int n = model.n;
    const int m = static_cast<int>(estimators.size());
    const double e_scale = model.sigma_e / std::sqrt(static_cast<double>(n));
    const double se2 = model.sigma_e * model.sigma_e;

    // Stack all estimators into one tall matrix so each block costs a single
    // matrix product.
    Eigen::MatrixXd stacked(m * n, n);
    for (int k = 0; k < m; ++k) {
        if (estimators[k].W.rows() != n || estimators[k].W.cols() != n)
            throw std::invalid_argument("estimator and model dimensions disagree");
        stacked.middleRows(k * n, n) = estimators[k].W;
    }

    std::vector<OnlineStats> clean(m), noisy(m), diff(m);
    Eigen::MatrixXd x(n, kBlock), y(n, kBlock), e_unit(n, kBlock);
    Eigen::MatrixXd r(m * n, kBlock);
    for (std::int64_t first = 0; first < samples; first += kBlock) {
        const std::int64_t b = std::min(kBlock, samples - first);
        auto xb = x.leftCols(b);
        auto yb = y.leftCols(b);
        auto eb = e_unit.leftCols(b);
        sample_block(model, seed, first, xb, yb, eb);
        r.leftCols(b).noalias() = stacked * yb;
        for (int k = 0; k < m; ++k) {
            auto rk = r.middleRows(k * n, n);
            for (std::int64_t j = 0; j < b; ++j) {
                const double clean_sq = (rk.col(j) - x.col(j)).squaredNorm();
                const double noisy_sq =
                    (rk.col(j) - x.col(j) - e_scale * e_unit.col(j)).squaredNorm();
                clean[k].add(clean_sq);
                noisy[k].add(noisy_sq);
                diff[k].add(noisy_sq - clean_sq);
            }
        }
    }

    std::vector<Prop1Result> out(m);
    for (int k = 0; k < m; ++k) {
        out[k].noisy_mean = noisy[k].mean;
        out[k].clean_mean = clean[k].mean;
        out[k].gap = diff[k].mean - se2;
        out[k].std_error = diff[k].std_error();
        out[k].samples = samples;
    }
    return out;
}

Prop1Result mc_prop1_check(const LinearEstimator& est, const SubspaceModel& model,
                           std::int64_t samples, std::uint64_t seed) {
    return mc_prop1_check(std::vector<LinearEstimator>{est}, model, samples, seed)[0];
}

GradientMeanResult mc_n2n_gradient_mean(const LinearEstimator& est,
                                        const SubspaceModel& model, std::int64_t samples,
                                        std::uint64_t seed) {
    check_sample_count(samples);
    model.validate();
    const int n = model.n;
    const double e_scale = model.sigma_e / std::sqrt(static_cast<double>(n));

    // G = 2 r y' with r = W y - y'. Entrywise, G_ij = 2 r_i y_j, so the running
    // first and second moments are rank-one updates computable by products of
    // (squared) blocks.
    Eigen::MatrixXd sum_g = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sum_g2 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd x(n, kBlock), y(n, kBlock), e_unit(n, kBlock), r(n, kBlock);
    for (std::int64_t first = 0; first < samples; first += kBlock) {
        const std::int64_t b = std::min(kBlock, samples - first);
        auto xb = x.leftCols(b);
        auto yb = y.leftCols(b);
        auto eb = e_unit.leftCols(b);
        sample_block(model, seed, first, xb, yb, eb);
        auto rb = r.leftCols(b);
        rb.noalias() = est.W * yb;
        rb -= xb;
        rb -= e_scale * eb;  // r = W y - y'
        sum_g.noalias() += 2.0 * (rb * yb.transpose());
        sum_g2.noalias() += 4.0 * (rb.cwiseAbs2() * yb.cwiseAbs2().transpose());
    }

    const Eigen::MatrixXd mean_g = sum_g / static_cast<double>(samples);
    const Eigen::MatrixXd var_g =
        (sum_g2 / static_cast<double>(samples) - mean_g.cwiseAbs2()) *
        (static_cast<double>(samples) / (samples - 1));

    GradientMeanResult out;
    out.frobenius_distance = (mean_g - risk_gradient(est, model)).norm();
    out.std_error = std::sqrt(var_g.sum() / static_cast<double>(samples));
    out.samples = samples;
    return out;
}

McEstimate mc_second_moment(const LinearEstimator& est, const SubspaceModel& model,
                            std::int64_t samples, std::uint64_t seed) {
    check_sample_count(samples);
    model.validate();
    const int n = model.n;
    const double e_scale = model.sigma_e / std::sqrt(static_cast<double>(n));

    OnlineStats stats;
    Eigen::MatrixXd x(n, kBlock), y(n, kBlock), e_unit(n, kBlock), r(n, kBlock);
    for (std::int64_t first = 0; first < samples; first += kBlock) {
        const std::int64_t b = std::min(kBlock, samples - first);
        auto xb = x.leftCols(b);
        auto yb = y.leftCols(b);
        auto eb = e_unit.leftCols(b);
        sample_block(model, seed, first, xb, yb, eb);
        auto rb = r.leftCols(b);
        rb.noalias() = est.W * yb;
        rb -= xb;
        rb -= e_scale * eb;
        // ||2 r y'||_F^2 = 4 ||r||^2 ||y||^2
        for (std::int64_t j = 0; j < b; ++j)
            stats.add(4.0 * rb.col(j).squaredNorm() * yb.col(j).squaredNorm());
    }
    return {stats.mean, stats.std_error(), samples};
}

}  // namespace ssrecon
