#pragma once

#include <Eigen/Dense>

#include "ssrecon/signal_model.hpp"

namespace ssrecon {

/// The linear denoiser f_W(y) = W y.
struct LinearEstimator {
    Eigen::MatrixXd W;

    static LinearEstimator zero(int n) { return {Eigen::MatrixXd::Zero(n, n)}; }
};

enum class Target { Clean, Noisy };

struct RiskBreakdown {
    double risk = 0;
    double optimal_risk = 0;
    double excess = 0;  ///< risk - optimal_risk
};

/// Population risk R(W) = (1/d) ||(W - I) U||_F^2 + (sigma_z^2/n) ||W||_F^2.
double risk_closed_form(const LinearEstimator& est, const SubspaceModel& model);

/// R(W*) = (sigma_z^2 d/n) / (1 + sigma_z^2 d/n).
double optimal_risk(const SubspaceModel& model);

/// W* = U U' / (1 + sigma_z^2 d/n): projection onto the subspace followed by
/// a noise-dependent shrinkage.
LinearEstimator optimal_estimator(const SubspaceModel& model);

RiskBreakdown risk_breakdown(const LinearEstimator& est, const SubspaceModel& model);

/// Gradient of the squared-norm risk (no 1/2 convention):
/// (2/d)(W - I) U U' + (2 sigma_z^2/n) W.
Eigen::MatrixXd risk_gradient(const LinearEstimator& est, const SubspaceModel& model);

/// Per-sample noise2noise stochastic gradient G(W) = 2 (W y - y') y'.
Eigen::MatrixXd n2n_sample_gradient(const LinearEstimator& est, const SamplePair& pair);

/// Per-sample supervised gradient 2 (W y - x) y'.
Eigen::MatrixXd supervised_sample_gradient(const LinearEstimator& est,
                                           const SamplePair& pair);

/// Mean of ||W y_i - t_i||^2 with targets t_i = x_i (Clean) or y'_i (Noisy).
double empirical_risk(const LinearEstimator& est, const Dataset& dataset, Target target);

/// Population minimizer of the noisier2noise regression E||W (x+z+z') - (x+z)||^2
/// with z' ~ N(0, extra_sigma^2/n I), evaluated for inference on y = x + z:
/// W_nr = (UU'/d + sigma_z^2/n I)(UU'/d + (sigma_z^2+extra_sigma^2)/n I)^(-1).
LinearEstimator noisier2noise_population_estimator(const SubspaceModel& model,
                                                   double extra_sigma);

}  // namespace ssrecon
