#include "ssrecon/linear_denoise.hpp"

#include <stdexcept>

namespace ssrecon {

namespace {

void check_shape(const LinearEstimator& est, const SubspaceModel& model) {
    if (est.W.rows() != model.n || est.W.cols() != model.n)
        throw std::invalid_argument("estimator is " + std::to_string(est.W.rows()) + "x" +
                                    std::to_string(est.W.cols()) + " but the model has n=" +
                                    std::to_string(model.n));
}

}  // namespace

double risk_closed_form(const LinearEstimator& est, const SubspaceModel& model) {
    check_shape(est, model);
    const Eigen::MatrixXd wu_minus_u = est.W * model.basis - model.basis;
    const double fit = wu_minus_u.squaredNorm() / model.d;
    const double noise = model.sigma_z * model.sigma_z / model.n * est.W.squaredNorm();
    return fit + noise;
}

double optimal_risk(const SubspaceModel& model) {
    const double a = model.sigma_z * model.sigma_z * model.d / model.n;
    return a / (1.0 + a);
}

LinearEstimator optimal_estimator(const SubspaceModel& model) {
    model.validate();
    const double a = model.sigma_z * model.sigma_z * model.d / model.n;
    const double shrink = 1.0 / (1.0 + a);
    LinearEstimator est;
    est.W.noalias() = shrink * (model.basis * model.basis.transpose());
    return est;
}

RiskBreakdown risk_breakdown(const LinearEstimator& est, const SubspaceModel& model) {
    RiskBreakdown b;
    b.risk = risk_closed_form(est, model);
    b.optimal_risk = optimal_risk(model);
    b.excess = b.risk - b.optimal_risk;
    return b;
}

Eigen::MatrixXd risk_gradient(const LinearEstimator& est, const SubspaceModel& model) {
    check_shape(est, model);
    const Eigen::MatrixXd wu_minus_u = est.W * model.basis - model.basis;
    Eigen::MatrixXd grad = (2.0 / model.d) * (wu_minus_u * model.basis.transpose());
    grad += (2.0 * model.sigma_z * model.sigma_z / model.n) * est.W;
    return grad;
}

Eigen::MatrixXd n2n_sample_gradient(const LinearEstimator& est, const SamplePair& pair) {
    if (est.W.cols() != pair.y.size())
        throw std::invalid_argument("estimator and sample dimensions disagree");
    const Eigen::VectorXd residual = est.W * pair.y - pair.y_prime;
    return 2.0 * residual * pair.y.transpose();
}

Eigen::MatrixXd supervised_sample_gradient(const LinearEstimator& est,
                                           const SamplePair& pair) {
    if (est.W.cols() != pair.y.size())
        throw std::invalid_argument("estimator and sample dimensions disagree");
    const Eigen::VectorXd residual = est.W * pair.y - pair.x;
    return 2.0 * residual * pair.y.transpose();
}

double empirical_risk(const LinearEstimator& est, const Dataset& dataset, Target target) {
    if (dataset.pairs.empty()) throw std::invalid_argument("empty dataset");
    check_shape(est, dataset.model);
    double sum = 0;
    Eigen::VectorXd prediction(dataset.model.n);
    for (const SamplePair& pair : dataset.pairs) {
        prediction.noalias() = est.W * pair.y;
        const Eigen::VectorXd& t = (target == Target::Clean) ? pair.x : pair.y_prime;
        sum += (prediction - t).squaredNorm();
    }
    return sum / dataset.size();
}

LinearEstimator noisier2noise_population_estimator(const SubspaceModel& model,
                                                   double extra_sigma) {
    model.validate();
    if (extra_sigma < 0) throw std::invalid_argument("extra_sigma must be nonnegative");
    const double sz2 = model.sigma_z * model.sigma_z;
    const double ex2 = extra_sigma * extra_sigma;
    // Both moment matrices share the eigenbasis {span U, its complement}:
    //   E[(x+z)(x+z+z')'] has eigenvalues 1/d + sz2/n (on) and sz2/n (off),
    //   E[(x+z+z')(x+z+z')'] has 1/d + (sz2+ex2)/n (on) and (sz2+ex2)/n (off).
    const double on = (1.0 / model.d + sz2 / model.n) /
                      (1.0 / model.d + (sz2 + ex2) / model.n);
    // Pseudo-inverse convention at sz2 + ex2 = 0: noiseless regression leaves
    // the off-subspace block at zero.
    const double off = (sz2 + ex2) > 0 ? sz2 / (sz2 + ex2) : 0.0;
    LinearEstimator est;
    est.W = off * Eigen::MatrixXd::Identity(model.n, model.n);
    est.W.noalias() += (on - off) * (model.basis * model.basis.transpose());
    return est;
}

}  // namespace ssrecon
