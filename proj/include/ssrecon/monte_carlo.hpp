#pragma once

#include <cstdint>
#include <vector>

#include "ssrecon/linear_denoise.hpp"

namespace ssrecon {

struct McEstimate {
    double mean = 0;
    double std_error = 0;
    std::int64_t samples = 0;
};

/// Monte Carlo estimate of E||W y - t||^2 over fresh pairs.
McEstimate mc_risk(const LinearEstimator& est, const SubspaceModel& model, Target target,
                   std::int64_t samples, std::uint64_t seed);

/// One row of the Proposition-1 check: the gap
/// mean||Wy - y'||^2 - mean||Wy - x||^2 - sigma_e^2 together with the standard
/// error of the paired difference estimator.
struct Prop1Result {
    double noisy_mean = 0;
    double clean_mean = 0;
    double gap = 0;        ///< noisy_mean - clean_mean - sigma_e^2
    double std_error = 0;  ///< of the paired difference
    std::int64_t samples = 0;

    bool holds(double n_std_errors = 3.0) const {
        return std::abs(gap) < n_std_errors * std_error;
    }
};

/// Checks Proposition 1 for several estimators at once over a shared stream of
/// fresh pairs (one data pass, one stacked matrix product per block).
std::vector<Prop1Result> mc_prop1_check(const std::vector<LinearEstimator>& estimators,
                                        const SubspaceModel& model, std::int64_t samples,
                                        std::uint64_t seed);

Prop1Result mc_prop1_check(const LinearEstimator& est, const SubspaceModel& model,
                           std::int64_t samples, std::uint64_t seed);

/// Distance between the Monte Carlo mean of per-sample noise2noise gradients and
/// the closed-form risk gradient, with the matching standard-error scale
/// sqrt(sum_ij Var[G_ij] / samples).
struct GradientMeanResult {
    double frobenius_distance = 0;
    double std_error = 0;
    std::int64_t samples = 0;

    bool holds(double n_std_errors = 3.0) const {
        return frobenius_distance < n_std_errors * std_error;
    }
};

GradientMeanResult mc_n2n_gradient_mean(const LinearEstimator& est,
                                        const SubspaceModel& model, std::int64_t samples,
                                        std::uint64_t seed);

/// Monte Carlo estimate of the stochastic-gradient second moment E||G(W)||_F^2.
McEstimate mc_second_moment(const LinearEstimator& est, const SubspaceModel& model,
                            std::int64_t samples, std::uint64_t seed);

}  // namespace ssrecon
