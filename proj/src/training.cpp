#include "ssrecon/training.hpp"

#include <cmath>
#include <stdexcept>

#include "ssrecon/errors.hpp"

namespace ssrecon {

BoundConstants BoundConstants::for_model(const SubspaceModel& model, MReading reading) {
    model.validate();
    BoundConstants c;
    const double sz2 = model.sigma_z * model.sigma_z;
    const double se2 = model.sigma_e * model.sigma_e;
    c.m = sz2 / model.n;
    c.B = 12.0 * sz2 * model.d / model.n + se2 * (1.0 + sz2);
    const double ten_over_d = 10.0 / model.d;
    c.M = reading == MReading::MSquaredIsTenOverD ? std::sqrt(ten_over_d) : ten_over_d;
    return c;
}

SgmSchedule SgmSchedule::lemma1(const BoundConstants& constants) {
    if (constants.m <= 0)
        throw std::domain_error(
            "degenerate schedule: m = sigma_z^2/n must be positive (noiseless input "
            "makes the risk non-strongly-convex)");
    SgmSchedule s;
    s.numerator = 2.0 / constants.m;
    s.offset = 2.0 * constants.M * constants.M / (constants.m * constants.m);
    return s;
}

double lemma1_stepsize(std::int64_t k, const BoundConstants& constants) {
    if (k < 1) throw std::invalid_argument("stepsize index k must be >= 1");
    return SgmSchedule::lemma1(constants).stepsize(k);
}

TrainReport sgm_single_pass(const Dataset& dataset, const SgmSchedule& schedule,
                            const LinearEstimator& init, bool trace_risk) {
    if (dataset.pairs.empty()) throw std::invalid_argument("empty dataset");
    const int n = dataset.model.n;
    if (init.W.rows() != n || init.W.cols() != n)
        throw std::invalid_argument("init estimator has wrong shape");

    TrainReport report;
    report.final_W = init;
    Eigen::MatrixXd& w = report.final_W.W;
    const std::int64_t total = dataset.size();
    const std::int64_t stride = std::max<std::int64_t>(1, total / 256);

    Eigen::VectorXd residual(n);
    for (std::int64_t k = 1; k <= total; ++k) {
        const SamplePair& pair = dataset.pairs[k - 1];
        const double eta = schedule.stepsize(k);
        residual.noalias() = w * pair.y;
        residual -= pair.y_prime;
        w.noalias() -= (2.0 * eta) * (residual * pair.y.transpose());
        if (trace_risk && (k % stride == 0 || k == total))
            report.risk_trajectory.emplace_back(k, risk_closed_form(report.final_W,
                                                                    dataset.model));
    }
    report.iterations = total;
    report.stop_reason = StopReason::DatasetExhausted;
    return report;
}

double QuadraticObjective::loss(const Eigen::MatrixXd& w) const {
    const double quad = (w * input_moment).cwiseProduct(w).sum();
    const double cross = w.cwiseProduct(cross_moment).sum();
    return quad - 2.0 * cross + target_sq_mean;
}

Eigen::MatrixXd QuadraticObjective::gradient(const Eigen::MatrixXd& w) const {
    return 2.0 * (w * input_moment - cross_moment);
}

QuadraticObjective QuadraticObjective::from_dataset(const Dataset& dataset, Target target) {
    if (dataset.pairs.empty()) throw std::invalid_argument("empty dataset");
    const int n = dataset.model.n;
    QuadraticObjective obj;
    obj.input_moment = Eigen::MatrixXd::Zero(n, n);
    obj.cross_moment = Eigen::MatrixXd::Zero(n, n);
    obj.target_sq_mean = 0;
    for (const SamplePair& pair : dataset.pairs) {
        const Eigen::VectorXd& t = (target == Target::Clean) ? pair.x : pair.y_prime;
        obj.input_moment.noalias() += pair.y * pair.y.transpose();
        obj.cross_moment.noalias() += t * pair.y.transpose();
        obj.target_sq_mean += t.squaredNorm();
    }
    const double inv = 1.0 / dataset.size();
    obj.input_moment *= inv;
    obj.cross_moment *= inv;
    obj.target_sq_mean *= inv;
    return obj;
}

double stability_learning_rate(const Eigen::MatrixXd& input_moment) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(input_moment,
                                                       Eigen::EigenvaluesOnly);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    if (!(lambda_max > 0))
        throw std::invalid_argument("degenerate input second moment; cannot pick a "
                                    "learning rate");
    return 0.5 / lambda_max;
}

TrainReport gd_early_stopped(const QuadraticObjective& train,
                             const QuadraticObjective& validation,
                             const GdOptions& options, const SubspaceModel* trace_model) {
    const int n = static_cast<int>(train.input_moment.rows());
    if (options.patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (options.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");

    const double lr = options.learning_rate > 0
                          ? options.learning_rate
                          : stability_learning_rate(train.input_moment);

    Eigen::MatrixXd w =
        options.init.size() > 0 ? options.init : Eigen::MatrixXd::Zero(n, n);
    if (w.rows() != n || w.cols() != n)
        throw std::invalid_argument("init estimator has wrong shape");

    TrainReport report;
    report.best_validation = validation.loss(w);
    Eigen::MatrixXd best_w = w;
    report.best_epoch = 0;
    int stall = 0;
    report.stop_reason = StopReason::MaxEpochs;

    for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
        w.noalias() -= lr * train.gradient(w);
        const double val = validation.loss(w);
        if (!std::isfinite(val) || !std::isfinite(train.loss(w)))
            throw DivergenceError("gradient descent diverged at epoch " +
                                      std::to_string(epoch) +
                                      " (learning rate too large?)",
                                  epoch);
        if (trace_model && options.trace_risk)
            report.risk_trajectory.emplace_back(epoch,
                                                risk_closed_form({w}, *trace_model));
        report.iterations = epoch;
        if (val < report.best_validation) {
            report.best_validation = val;
            best_w = w;
            report.best_epoch = epoch;
            stall = 0;
        } else if (val == report.best_validation) {
            stall = 0;  // flat plateau (e.g. zero learning rate) is not a stop signal
        } else {
            ++stall;
            if (stall >= options.patience) {
                report.stop_reason = StopReason::EarlyStopped;
                break;
            }
        }
    }
    report.final_W.W = std::move(best_w);
    return report;
}

TrainReport gd_early_stopped(const Dataset& train, const Dataset& validation,
                             const GdOptions& options) {
    if (train.pairs.empty() || validation.pairs.empty())
        throw std::invalid_argument("train and validation datasets must be nonempty");
    const QuadraticObjective train_obj = QuadraticObjective::from_dataset(train, Target::Noisy);
    const QuadraticObjective val_obj =
        QuadraticObjective::from_dataset(validation, Target::Noisy);
    return gd_early_stopped(train_obj, val_obj, options, &train.model);
}

TrainReport gd_noisier2noise(const Dataset& train, const Dataset& validation,
                             double extra_sigma, const GdOptions& options) {
    if (train.pairs.empty() || validation.pairs.empty())
        throw std::invalid_argument("train and validation datasets must be nonempty");
    if (extra_sigma < 0) throw std::invalid_argument("extra_sigma must be nonnegative");
    const int n = train.model.n;
    const double ridge = extra_sigma * extra_sigma / n;

    // Inputs are y + z' with fresh z' every epoch; in expectation that adds
    // extra_sigma^2/n I to the input second moment and leaves the cross moment
    // (targets are the stored y) untouched.
    auto noisier = [&](const Dataset& ds) {
        QuadraticObjective obj;
        const int count = ds.size();
        obj.input_moment = Eigen::MatrixXd::Zero(n, n);
        obj.cross_moment = Eigen::MatrixXd::Zero(n, n);
        obj.target_sq_mean = 0;
        for (const SamplePair& pair : ds.pairs) {
            obj.input_moment.noalias() += pair.y * pair.y.transpose();
            obj.target_sq_mean += pair.y.squaredNorm();
        }
        obj.input_moment /= count;
        obj.target_sq_mean /= count;
        obj.cross_moment = obj.input_moment;
        obj.input_moment += ridge * Eigen::MatrixXd::Identity(n, n);
        return obj;
    };
    return gd_early_stopped(noisier(train), noisier(validation), options, &train.model);
}

double theorem1_bound(const SubspaceModel& model, std::int64_t n_samples) {
    model.validate();
    if (model.sigma_z <= 0)
        throw std::domain_error("theorem1_bound requires sigma_z > 0");
    if (n_samples <= 2)
        throw std::domain_error("theorem1_bound is out of domain for N <= 2");
    const double sz2 = model.sigma_z * model.sigma_z;
    const double se2 = model.sigma_e * model.sigma_e;
    const double m = sz2 / model.n;
    const double prefactor = (1.0 / model.d + m) / (m * m);
    const double b = 12.0 * sz2 * model.d / model.n + se2 * (1.0 + sz2);
    return optimal_risk(model) +
           prefactor / static_cast<double>(n_samples - 2) * (2.0 + b * b);
}

SecondMomentReport second_moment_check(const LinearEstimator& est,
                                       const SubspaceModel& model,
                                       const BoundConstants& constants,
                                       std::int64_t samples, std::uint64_t seed) {
    if (samples < 10000)
        throw std::invalid_argument("second_moment_check needs at least 10^4 samples");
    const McEstimate lhs = mc_second_moment(est, model, samples, seed);
    const double dist2 = (est.W - optimal_estimator(model).W).squaredNorm();
    SecondMomentReport report;
    report.lhs = lhs.mean;
    report.std_error = lhs.std_error;
    report.rhs = constants.M * constants.M * dist2 + constants.B * constants.B;
    report.holds = report.lhs <= report.rhs + 3.0 * report.std_error;
    return report;
}

double default_gd_learning_rate(const Dataset& train) {
    return stability_learning_rate(
        QuadraticObjective::from_dataset(train, Target::Noisy).input_moment);
}

}  // namespace ssrecon
