#pragma once

#include <string>
#include <vector>

#include "ssrecon/cs_masks.hpp"
#include "ssrecon/linear_denoise.hpp"

namespace ssrecon {

struct HistBin {
    double left = 0;
    double right = 0;
    std::int64_t count = 0;
};

struct GradVarReport {
    std::vector<double> per_sample;  ///< normalized variances, one per sample
    double mean = 0;
    double mean_std_error = 0;
    std::vector<HistBin> histogram;  ///< log-spaced over the observed range
    std::string loss_label;
    bool normalized = true;  ///< false when the empirical risk gradient vanished
};

enum class GradLoss { Supervised, Noise2Noise, CsSelfSupervised };

/// Empirical risk gradient (2/N) sum (W y_i - x_i) y_i', the supervised
/// reference all per-sample variances are measured against.
Eigen::MatrixXd empirical_risk_gradient(const LinearEstimator& est, const Dataset& dataset);

/// Per-sample normalized variances
/// ||grad_ss(f(y_i), y'_i) - grad_hat||^2 / ||grad_hat||^2 for the denoising
/// losses. The cs-self-supervised loss lives on complex batches; use the
/// CsBatch overload for it.
GradVarReport normalized_gradient_variances(const LinearEstimator& est,
                                            const Dataset& dataset, GradLoss loss,
                                            int bins = 50);

/// CS analog: per-sample gradients of the weighted masked-Fourier loss
/// (GradLoss::CsSelfSupervised) or of the supervised loss, against the
/// supervised empirical gradient of the same batch.
GradVarReport cs_normalized_gradient_variances(const Eigen::MatrixXcd& v,
                                               const CsBatch& batch, GradLoss loss,
                                               int bins = 50);

/// The standard evaluation point: W after one full-batch supervised epoch from
/// zero on the same dataset.
LinearEstimator one_epoch_supervised_gd(const Dataset& dataset);

/// Fourier-domain counterpart for the CS setting.
Eigen::MatrixXcd cs_one_epoch_supervised_gd(const CsBatch& batch, std::uint64_t seed);

}  // namespace ssrecon
