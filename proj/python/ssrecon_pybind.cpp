// Python bindings for the main operations: the subspace model, closed-form
// risk machinery, training entry points, mask splitting and the sweep driver.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssrecon/csv_io.hpp"
#include "ssrecon/experiments.hpp"
#include "ssrecon/grad_variance.hpp"
#include "ssrecon/monte_carlo.hpp"
#include "ssrecon/training.hpp"

namespace py = pybind11;
using namespace ssrecon;

namespace {

py::dict dataset_arrays(const Dataset& ds) {
    const int n = ds.model.n;
    const int count = ds.size();
    Eigen::MatrixXd x(n, count), y(n, count), y_prime(n, count);
    for (int i = 0; i < count; ++i) {
        x.col(i) = ds.pairs[i].x;
        y.col(i) = ds.pairs[i].y;
        y_prime.col(i) = ds.pairs[i].y_prime;
    }
    py::dict out;
    out["x"] = x;
    out["y"] = y;
    out["y_prime"] = y_prime;
    return out;
}

py::dict split_dict(const MaskSplit& split, const CsScheme& scheme) {
    py::dict out;
    out["m_tilde"] = split.m_tilde;
    out["m_input"] = split.m_input;
    out["m_target"] = split.m_target;
    out["inclusion_prob"] = split.inclusion_prob;
    out["weights"] = split.weights;
    out["center_begin"] = split.center_begin;
    out["center_count"] = split.center_count;
    out["p_prime"] = scheme.p_prime;
    out["q"] = scheme.q;
    return out;
}

py::dict report_dict(const GradVarReport& report) {
    py::dict out;
    out["per_sample"] = report.per_sample;
    out["mean"] = report.mean;
    out["mean_std_error"] = report.mean_std_error;
    out["loss_label"] = report.loss_label;
    out["normalized"] = report.normalized;
    py::list hist;
    for (const HistBin& bin : report.histogram)
        hist.append(py::make_tuple(bin.left, bin.right, bin.count));
    out["histogram"] = hist;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Linear self-supervised reconstruction laboratory";

    py::class_<SubspaceModel>(m, "SubspaceModel")
        .def(py::init([](int n, int d, double sigma_z, double sigma_e,
                         std::uint64_t seed) {
                 return SubspaceModel::make(n, d, sigma_z, sigma_e, seed);
             }),
             py::arg("n"), py::arg("d"), py::arg("sigma_z"), py::arg("sigma_e"),
             py::arg("seed") = 0)
        .def_readonly("n", &SubspaceModel::n)
        .def_readonly("d", &SubspaceModel::d)
        .def_readonly("sigma_z", &SubspaceModel::sigma_z)
        .def_readonly("sigma_e", &SubspaceModel::sigma_e)
        .def_readonly("basis", &SubspaceModel::basis)
        .def("with_sigma_e", &SubspaceModel::with_sigma_e, py::arg("sigma_e"));

    m.def("random_orthonormal_basis", &random_orthonormal_basis, py::arg("n"),
          py::arg("d"), py::arg("seed"));

    m.def(
        "make_dataset",
        [](const SubspaceModel& model, int n_pairs, std::uint64_t seed) {
            return dataset_arrays(make_dataset(model, n_pairs, seed));
        },
        py::arg("model"), py::arg("n_pairs"), py::arg("seed"),
        "Sample n_pairs (x, y, y') columns from the model.");

    m.def(
        "risk_closed_form",
        [](const Eigen::MatrixXd& w, const SubspaceModel& model) {
            return risk_closed_form({w}, model);
        },
        py::arg("w"), py::arg("model"));
    m.def("optimal_risk", &optimal_risk, py::arg("model"));
    m.def(
        "optimal_estimator",
        [](const SubspaceModel& model) { return optimal_estimator(model).W; },
        py::arg("model"));
    m.def(
        "risk_gradient",
        [](const Eigen::MatrixXd& w, const SubspaceModel& model) {
            return risk_gradient({w}, model);
        },
        py::arg("w"), py::arg("model"));
    m.def(
        "n2n_sample_gradient",
        [](const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
           const Eigen::VectorXd& y_prime) {
            SamplePair pair;
            pair.x = y;  // unused by the noise2noise gradient
            pair.y = y;
            pair.y_prime = y_prime;
            return n2n_sample_gradient({w}, pair);
        },
        py::arg("w"), py::arg("y"), py::arg("y_prime"));
    m.def(
        "noisier2noise_population_estimator",
        [](const SubspaceModel& model, double extra_sigma) {
            return noisier2noise_population_estimator(model, extra_sigma).W;
        },
        py::arg("model"), py::arg("extra_sigma"));

    m.def("theorem1_bound", &theorem1_bound, py::arg("model"), py::arg("n_samples"));
    m.def(
        "lemma1_stepsize",
        [](std::int64_t k, const SubspaceModel& model) {
            return lemma1_stepsize(k, BoundConstants::for_model(model));
        },
        py::arg("k"), py::arg("model"));

    m.def(
        "train_denoiser_gd",
        [](const SubspaceModel& model, int n_train, std::uint64_t seed,
           double learning_rate, int patience, int max_epochs) {
            const Dataset train = make_dataset(model, n_train, substream(seed, 1)());
            const Dataset validation = make_dataset(
                model, std::max(50, n_train / 5), substream(seed, 2)());
            GdOptions options;
            options.learning_rate = learning_rate;
            options.patience = patience;
            options.max_epochs = max_epochs;
            const TrainReport report = gd_early_stopped(train, validation, options);
            py::dict out;
            out["w"] = report.final_W.W;
            out["risk"] = risk_closed_form(report.final_W, model);
            out["epochs"] = report.iterations;
            out["best_epoch"] = report.best_epoch;
            return out;
        },
        py::arg("model"), py::arg("n_train"), py::arg("seed"),
        py::arg("learning_rate") = 0.0, py::arg("patience") = 10,
        py::arg("max_epochs") = 2000,
        "Early-stopped gradient descent on the noisy-target loss.");

    m.def(
        "train_denoiser_sgm",
        [](const SubspaceModel& model, int n_train, std::uint64_t seed) {
            const Dataset train = make_dataset(model, n_train, substream(seed, 1)());
            const SgmSchedule schedule =
                SgmSchedule::lemma1(BoundConstants::for_model(model));
            const TrainReport report =
                sgm_single_pass(train, schedule, LinearEstimator::zero(model.n));
            py::dict out;
            out["w"] = report.final_W.W;
            out["risk"] = risk_closed_form(report.final_W, model);
            return out;
        },
        py::arg("model"), py::arg("n_train"), py::arg("seed"),
        "One pass of the stochastic gradient method with Lemma-1 stepsizes.");

    m.def("derived_fractions", &derived_fractions, py::arg("nu"), py::arg("p"),
          py::arg("mu"));
    m.def(
        "build_split",
        [](int n_freq, double nu, double p, double mu, std::uint64_t seed) {
            const CsScheme scheme(n_freq, nu, p, mu);
            Xoshiro256pp rng = substream(seed, stream_tag::kSplit);
            return split_dict(build_split(scheme, rng), scheme);
        },
        py::arg("n_freq"), py::arg("nu"), py::arg("p"), py::arg("mu"),
        py::arg("seed") = 0);
    m.def("unitary_dft_matrix", &unitary_dft_matrix, py::arg("n"));
    m.def(
        "ss_cs_loss",
        [](const Eigen::VectorXcd& reconstruction, const Eigen::VectorXcd& target,
           const std::vector<std::uint8_t>& m_target, const Eigen::VectorXd& weights) {
            return ss_cs_loss(reconstruction, target, m_target, weights,
                              unitary_dft_matrix(static_cast<int>(reconstruction.size())));
        },
        py::arg("reconstruction"), py::arg("target"), py::arg("m_target"),
        py::arg("weights"));
    m.def(
        "prop2_exact_check",
        [](const Eigen::VectorXcd& a, const Eigen::VectorXcd& x,
           const Eigen::VectorXd& inclusion_prob) {
            return prop2_exact_check(a, x, inclusion_prob,
                                     unitary_dft_matrix(static_cast<int>(a.size())));
        },
        py::arg("a"), py::arg("x"), py::arg("inclusion_prob"));

    m.def(
        "normalized_gradient_variances",
        [](const SubspaceModel& model, int n_samples, std::uint64_t seed,
           const std::string& loss) {
            GradLoss kind;
            if (loss == "supervised")
                kind = GradLoss::Supervised;
            else if (loss == "noise2noise")
                kind = GradLoss::Noise2Noise;
            else
                throw std::invalid_argument("loss must be supervised or noise2noise");
            const Dataset ds = make_dataset(model, n_samples, substream(seed, 1)());
            const LinearEstimator w = one_epoch_supervised_gd(ds);
            return report_dict(normalized_gradient_variances(w, ds, kind));
        },
        py::arg("model"), py::arg("n_samples"), py::arg("seed"), py::arg("loss"),
        "Per-sample normalized gradient variances at the one-epoch point.");

    m.def(
        "run_sweep",
        [](const std::string& config_json) {
            return csv_to_string(run_sweep(parse_config_json(config_json)));
        },
        py::arg("config_json"),
        "Run a sweep from a JSON config string; returns the CSV text.");
    m.def(
        "fit_rate",
        [](const std::string& csv_text, double param) {
            const RateFit fit = fit_rate(parse_csv_string(csv_text), param);
            py::dict out;
            out["slope"] = fit.slope;
            out["intercept"] = fit.intercept;
            out["r_squared"] = fit.r_squared;
            out["excluded_sizes"] = fit.excluded_sizes;
            return out;
        },
        py::arg("csv_text"), py::arg("param"));
}
