#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ssrecon/linear_denoise.hpp"
#include "ssrecon/monte_carlo.hpp"

namespace ssrecon {

/// Constants of the (M,B)-bounded stochastic-gradient model:
/// E||G(W)||^2 <= M^2 ||W - W*||_F^2 + B^2 with strong convexity m.
struct BoundConstants {
    double m = 0;  ///< strong-convexity constant sigma_z^2/n
    double M = 0;  ///< second-moment slope
    double B = 0;  ///< second-moment offset 12 sigma_z^2 d/n + sigma_e^2 (1+sigma_z^2)

    /// Two readings of the slope constant are defensible: M = 10/d and
    /// M^2 = 10/d. Both are supported and nothing picks one silently.
    enum class MReading { MSquaredIsTenOverD, MIsTenOverD };

    static BoundConstants for_model(const SubspaceModel& model,
                                    MReading reading = MReading::MSquaredIsTenOverD);
};

/// eta_k = (2/m) / (2 M^2/m^2 + k). Throws std::domain_error when m == 0 (a
/// noiseless input makes the risk non-strongly-convex).
double lemma1_stepsize(std::int64_t k, const BoundConstants& constants);

/// Decaying stepsize eta_k = numerator / (offset + k).
struct SgmSchedule {
    double numerator = 0;  ///< a
    double offset = 0;     ///< c

    double stepsize(std::int64_t k) const {
        return numerator / (offset + static_cast<double>(k));
    }

    static SgmSchedule lemma1(const BoundConstants& constants);
};

enum class StopReason { DatasetExhausted, EarlyStopped, MaxEpochs };

struct TrainReport {
    LinearEstimator final_W;
    std::int64_t iterations = 0;
    /// (step, closed-form risk) samples, populated when tracing was requested.
    std::vector<std::pair<std::int64_t, double>> risk_trajectory;
    StopReason stop_reason = StopReason::DatasetExhausted;
    double best_validation = 0;
    std::int64_t best_epoch = 0;
};

/// One pass of the stochastic gradient method: W <- W - eta_k G_k(W) for
/// k = 1..N, each pair used exactly once in order.
TrainReport sgm_single_pass(const Dataset& dataset, const SgmSchedule& schedule,
                            const LinearEstimator& init, bool trace_risk = false);

struct GdOptions {
    double learning_rate = 0;  ///< <= 0 selects 0.5 / lambda_max(input second moment)
    int patience = 10;         ///< consecutive non-improving validations before stopping
    int max_epochs = 2000;
    bool trace_risk = false;
    Eigen::MatrixXd init;      ///< empty = start at zero
};

/// Sufficient statistics of a least-squares objective mean ||W y_i - t_i||^2.
/// Loss and gradient depend on the data only through these moments, which is
/// what makes nested-N sweeps cheap (one snapshot per prefix).
struct QuadraticObjective {
    Eigen::MatrixXd input_moment;  ///< (1/N) sum y y'
    Eigen::MatrixXd cross_moment;  ///< (1/N) sum t y'
    double target_sq_mean = 0;     ///< (1/N) sum ||t||^2

    double loss(const Eigen::MatrixXd& w) const;
    Eigen::MatrixXd gradient(const Eigen::MatrixXd& w) const;
    static QuadraticObjective from_dataset(const Dataset& dataset, Target target);
};

/// Full-batch gradient descent on the empirical noisy-target loss
/// mean ||W y_i - y'_i||^2, early-stopped on the self-supervised validation
/// loss; returns the best-validation iterate. Throws DivergenceError when the
/// loss leaves the finite range.
TrainReport gd_early_stopped(const Dataset& train, const Dataset& validation,
                             const GdOptions& options = {});

TrainReport gd_early_stopped(const QuadraticObjective& train,
                             const QuadraticObjective& validation,
                             const GdOptions& options = {},
                             const SubspaceModel* trace_model = nullptr);

/// Noisier2noise analog: gradient descent on the injected-noise regression
/// E_{z'} mean ||W (y_i + z') - y_i||^2 with z' ~ N(0, extra_sigma^2/n I).
/// The expectation over the per-epoch noise resampling is exact, so runs are
/// deterministic.
TrainReport gd_noisier2noise(const Dataset& train, const Dataset& validation,
                             double extra_sigma, const GdOptions& options = {});

/// Theorem-1 generalization bound
/// R(W*) + ((1/d + sigma_z^2/n)/(sigma_z^2/n)^2) (1/(N-2)) (2 + B^2).
double theorem1_bound(const SubspaceModel& model, std::int64_t n_samples);

struct SecondMomentReport {
    double lhs = 0;  ///< Monte Carlo estimate of E||G(W)||_F^2
    double rhs = 0;  ///< M^2 ||W - W*||_F^2 + B^2
    double std_error = 0;
    bool holds = false;  ///< lhs <= rhs + 3 standard errors
};

SecondMomentReport second_moment_check(const LinearEstimator& est,
                                       const SubspaceModel& model,
                                       const BoundConstants& constants,
                                       std::int64_t samples, std::uint64_t seed = 0);

/// 0.5 / lambda_max of the empirical input second-moment matrix; the default
/// gradient-descent learning rate.
double default_gd_learning_rate(const Dataset& train);

double stability_learning_rate(const Eigen::MatrixXd& input_moment);

}  // namespace ssrecon
