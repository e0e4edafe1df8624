#include "ssrecon/grad_variance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssrecon/training.hpp"

namespace ssrecon {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

std::vector<HistBin> log_spaced_histogram(const std::vector<double>& values, int bins) {
    std::vector<HistBin> hist;
    if (values.empty() || bins < 1) return hist;
    const double max_v = *std::max_element(values.begin(), values.end());
    double min_v = *std::min_element(values.begin(), values.end());
    if (max_v <= 0) {
        hist.push_back({0.0, 0.0, static_cast<std::int64_t>(values.size())});
        return hist;
    }
    // Zeros cannot sit on a log axis; clamp the low edge and count them in the
    // first bin so totals still match the sample count.
    if (min_v <= 0) min_v = max_v * 1e-12;
    if (min_v == max_v) {
        hist.push_back({min_v, max_v, static_cast<std::int64_t>(values.size())});
        return hist;
    }
    const double log_lo = std::log(min_v);
    const double log_hi = std::log(max_v);
    hist.resize(bins);
    for (int b = 0; b < bins; ++b) {
        hist[b].left = std::exp(log_lo + (log_hi - log_lo) * b / bins);
        hist[b].right = std::exp(log_lo + (log_hi - log_lo) * (b + 1) / bins);
        hist[b].count = 0;
    }
    hist.front().left = min_v;
    hist.back().right = max_v;
    for (double v : values) {
        int b;
        if (v <= min_v) {
            b = 0;
        } else if (v >= max_v) {
            b = bins - 1;
        } else {
            b = static_cast<int>((std::log(v) - log_lo) / (log_hi - log_lo) * bins);
            b = std::clamp(b, 0, bins - 1);
        }
        ++hist[b].count;
    }
    return hist;
}

GradVarReport finalize_report(std::vector<double> per_sample, double ref_norm_sq,
                              std::string label, int bins) {
    GradVarReport report;
    report.normalized = ref_norm_sq > 0;
    if (report.normalized)
        for (double& v : per_sample) v /= ref_norm_sq;
    report.per_sample = std::move(per_sample);
    double sum = 0;
    for (double v : report.per_sample) sum += v;
    const double n = static_cast<double>(report.per_sample.size());
    report.mean = sum / n;
    double ss = 0;
    for (double v : report.per_sample) ss += (v - report.mean) * (v - report.mean);
    report.mean_std_error = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
    report.histogram = log_spaced_histogram(report.per_sample, bins);
    report.loss_label = std::move(label);
    return report;
}

}  // namespace

Eigen::MatrixXd empirical_risk_gradient(const LinearEstimator& est, const Dataset& dataset) {
    if (dataset.pairs.empty()) throw std::invalid_argument("empty dataset");
    const int n = dataset.model.n;
    if (est.W.rows() != n || est.W.cols() != n)
        throw std::invalid_argument("estimator and dataset dimensions disagree");
    // Single fixed-order reduction through matrix products, so the result does
    // not depend on any parallel schedule.
    MatrixXd yy = MatrixXd::Zero(n, n);
    MatrixXd xy = MatrixXd::Zero(n, n);
    for (const SamplePair& pair : dataset.pairs) {
        yy.noalias() += pair.y * pair.y.transpose();
        xy.noalias() += pair.x * pair.y.transpose();
    }
    const double inv = 1.0 / dataset.size();
    // Scale both moments the same way before the product; folding the scalars
    // into the matrix product rounds the two terms differently and turns the
    // exact-zero residual cases into 1e-18 noise.
    const MatrixXd mean_yy = yy * inv;
    const MatrixXd mean_xy = xy * inv;
    MatrixXd grad = est.W * mean_yy;
    grad -= mean_xy;
    grad *= 2.0;
    return grad;
}

GradVarReport normalized_gradient_variances(const LinearEstimator& est,
                                            const Dataset& dataset, GradLoss loss,
                                            int bins) {
    if (loss == GradLoss::CsSelfSupervised)
        throw std::invalid_argument(
            "cs-self-supervised gradients live on complex batches; use the CsBatch "
            "overload");
    if (dataset.size() < 100)
        throw std::invalid_argument("need at least 100 samples for a stable reference "
                                    "gradient");
    const int n = dataset.model.n;
    const int count = dataset.size();

    MatrixXd y(n, count), t(n, count);
    for (int i = 0; i < count; ++i) {
        y.col(i) = dataset.pairs[i].y;
        t.col(i) = loss == GradLoss::Supervised ? dataset.pairs[i].x
                                                : dataset.pairs[i].y_prime;
    }

    const MatrixXd ref = empirical_risk_gradient(est, dataset);
    const double ref_norm_sq = ref.squaredNorm();

    MatrixXd residual = est.W * y - t;           // r_i per column
    MatrixXd ref_times_y = ref * y;              // (ref y_i) per column
    std::vector<double> per_sample(count);
    for (int i = 0; i < count; ++i) {
        // ||2 r y' - ref||_F^2 expanded; the cross term is 4 r'(ref y).
        const double g_sq = 4.0 * residual.col(i).squaredNorm() * y.col(i).squaredNorm();
        const double cross = residual.col(i).dot(ref_times_y.col(i));
        per_sample[i] = g_sq - 4.0 * cross + ref_norm_sq;
        per_sample[i] = std::max(per_sample[i], 0.0);
    }

    const char* label = loss == GradLoss::Supervised ? "supervised" : "noise2noise";
    return finalize_report(std::move(per_sample), ref_norm_sq, label, bins);
}

GradVarReport cs_normalized_gradient_variances(const Eigen::MatrixXcd& v,
                                               const CsBatch& batch, GradLoss loss,
                                               int bins) {
    if (loss == GradLoss::Noise2Noise)
        throw std::invalid_argument("noise2noise gradients live on denoising datasets");
    const int count = batch.size();
    if (count < 100)
        throw std::invalid_argument("need at least 100 samples for a stable reference "
                                    "gradient");
    const bool supervised = loss == GradLoss::Supervised;

    MatrixXcd prediction = v * batch.u_hat;
    // Supervised reference gradient (2/N) sum (V u - x) u^H.
    const MatrixXcd sup_residual = prediction - batch.x_hat;
    const MatrixXcd ref =
        (2.0 / count) * (sup_residual * batch.u_hat.adjoint());
    const double ref_norm_sq = ref.squaredNorm();

    MatrixXcd residual;
    if (supervised) {
        residual = sup_residual;
    } else {
        residual = prediction - batch.target_hat;
        residual = residual.cwiseProduct(batch.loss_weights.cast<std::complex<double>>());
    }

    const MatrixXcd ref_times_u = ref * batch.u_hat;
    std::vector<double> per_sample(count);
    for (int i = 0; i < count; ++i) {
        const double g_sq =
            4.0 * residual.col(i).squaredNorm() * batch.u_hat.col(i).squaredNorm();
        const double cross = residual.col(i).dot(ref_times_u.col(i)).real();
        per_sample[i] = g_sq - 4.0 * cross + ref_norm_sq;
        per_sample[i] = std::max(per_sample[i], 0.0);
    }

    const char* label = supervised ? "cs-supervised" : "cs-self-supervised";
    return finalize_report(std::move(per_sample), ref_norm_sq, label, bins);
}

LinearEstimator one_epoch_supervised_gd(const Dataset& dataset) {
    const QuadraticObjective obj = QuadraticObjective::from_dataset(dataset, Target::Clean);
    const double lr = stability_learning_rate(obj.input_moment);
    LinearEstimator est = LinearEstimator::zero(dataset.model.n);
    est.W -= lr * obj.gradient(est.W);
    return est;
}

Eigen::MatrixXcd cs_one_epoch_supervised_gd(const CsBatch& batch, std::uint64_t seed) {
    const int n = static_cast<int>(batch.x_hat.rows());
    const MatrixXd ones = MatrixXd::Ones(n, batch.size());
    const double eta = 0.5 / max_row_hessian_eigenvalue(batch.u_hat, ones, seed);
    // One supervised step from zero: V_1 = eta (2/N) x_hat u_hat^H.
    return eta * (2.0 / batch.size()) * (batch.x_hat * batch.u_hat.adjoint());
}

}  // namespace ssrecon
