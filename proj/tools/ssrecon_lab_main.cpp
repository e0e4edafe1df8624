// ssrecon-lab: sweeps, rate fits, property verification, gradient-variance
// reports and mask-split inspection for the linear self-supervised
// reconstruction laboratory.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssrecon/csv_io.hpp"
#include "ssrecon/errors.hpp"
#include "ssrecon/experiments.hpp"
#include "ssrecon/monte_carlo.hpp"
#include "ssrecon/training.hpp"

namespace {

using namespace ssrecon;

struct SweepFlags {
    std::string config_path;
    std::string experiment;
    int n = -1, d = -1;
    double sigma_z = -2;
    std::vector<double> sigma_e, mu;
    double nu = -1, p = -1;
    std::vector<int> train_sizes;
    int trials = -1, samples = -1, workers = -1;
    long long seed = -1;
    std::string out;
    double learning_rate = -1;
    int patience = -1, max_epochs = -1;
    bool timing = false;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--experiment", flags.experiment,
                    "denoise-sgm | denoise-gd | cs-linear | grad-var");
    cmd->add_option("--n", flags.n, "ambient dimension");
    cmd->add_option("--d", flags.d, "subspace dimension");
    cmd->add_option("--sigma-z", flags.sigma_z, "input noise level");
    cmd->add_option("--sigma-e", flags.sigma_e, "target noise levels")->delimiter(',');
    cmd->add_option("--nu", flags.nu, "center fraction");
    cmd->add_option("--p", flags.p, "input undersampling fraction");
    cmd->add_option("--mu", flags.mu, "acquisition fractions")->delimiter(',');
    cmd->add_option("--train-sizes", flags.train_sizes, "training set sizes")
        ->delimiter(',');
    cmd->add_option("--trials", flags.trials, "independent trials per cell");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--samples", flags.samples, "grad-var sample count");
    cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
    cmd->add_option("--out", flags.out, "output path");
    cmd->add_option("--learning-rate", flags.learning_rate, "GD learning rate (0 = auto)");
    cmd->add_option("--patience", flags.patience, "early-stopping patience");
    cmd->add_option("--max-epochs", flags.max_epochs, "GD epoch cap");
    cmd->add_flag("--timing", flags.timing,
                  "record wall times in the CSV (breaks byte-for-byte determinism)");
}

SweepConfig merge_config(const SweepFlags& flags) {
    SweepConfig config;
    if (!flags.config_path.empty()) config = parse_config_file(flags.config_path);
    if (!flags.experiment.empty())
        config.experiment = experiment_from_string(flags.experiment);
    if (flags.n >= 0) config.n = flags.n;
    if (flags.d >= 0) config.d = flags.d;
    if (flags.sigma_z > -2) config.sigma_z = flags.sigma_z;
    if (!flags.sigma_e.empty()) config.sigma_e = flags.sigma_e;
    if (flags.nu >= 0) config.nu = flags.nu;
    if (flags.p >= 0) config.p = flags.p;
    if (!flags.mu.empty()) config.mu = flags.mu;
    if (!flags.train_sizes.empty()) config.train_sizes = flags.train_sizes;
    if (flags.trials >= 0) config.trials = flags.trials;
    if (flags.samples >= 0) config.samples = flags.samples;
    if (flags.workers >= 0) config.workers = flags.workers;
    if (!flags.out.empty()) config.out = flags.out;
    if (flags.learning_rate >= 0) config.learning_rate = flags.learning_rate;
    if (flags.patience >= 0) config.patience = flags.patience;
    if (flags.max_epochs >= 0) config.max_epochs = flags.max_epochs;
    if (flags.timing) config.record_wall_time = true;
    if (flags.seed >= 0) {
        config.seed = static_cast<std::uint64_t>(flags.seed);
        config.seed_set = true;
    } else if (!config.seed_set) {
        // Seed default of last resort.
        if (const char* env = std::getenv("SSRECON_SEED")) {
            config.seed = std::strtoull(env, nullptr, 10);
            config.seed_set = true;
        }
    }
    return config;
}

int run_sweep_command(const SweepFlags& flags) {
    const SweepConfig config = merge_config(flags);
    const SweepResult result = run_sweep(config);
    for (const SweepRow& row : result.rows)
        if (row.failed)
            std::cerr << "warning: cell failed (" << row.experiment << " N=" << row.n_train
                      << " trial=" << row.trial << " param=" << row.param
                      << "): " << row.failure << "\n";
    if (config.out.empty()) {
        std::cout << csv_to_string(result);
    } else {
        emit_csv(result, config.out);
        std::cout << "wrote " << result.rows.size() << " rows to " << config.out << "\n";
    }
    return 0;
}

int run_fit_rate(const std::string& in_path, const std::string& group) {
    if (group != "param")
        throw std::invalid_argument("only --group param is supported");
    const SweepResult result = parse_csv(in_path);
    for (double param : result_params(result)) {
        const RateFit fit = fit_rate(result, param);
        for (int excluded : fit.excluded_sizes)
            std::cerr << "warning: param " << param << ": N=" << excluded
                      << " excluded (nonpositive mean excess)\n";
        std::printf("param %g: slope %.4f intercept %.4f r2 %.4f\n", param, fit.slope,
                    fit.intercept, fit.r_squared);
    }
    return 0;
}

int run_grad_var_command(const SweepFlags& flags) {
    SweepConfig config = merge_config(flags);
    config.experiment = ExperimentKind::GradVar;
    const std::string prefix = config.out.empty() ? "grad_var" : config.out;
    const auto runs = run_grad_var(config);
    for (const GradVarRun& run : runs) {
        std::string label = run.report.loss_label;
        if (run.report.loss_label != "supervised")
            label += "-" + std::to_string(run.sigma_e).substr(0, 4);
        const std::string samples_path = prefix + "-" + label + "-samples.csv";
        const std::string hist_path = prefix + "-" + label + "-hist.csv";
        write_grad_var_csv(run.report, samples_path, hist_path);
        std::printf("%-18s sigma_e=%-5g mean normalized variance %.6g (se %.3g) -> %s\n",
                    run.report.loss_label.c_str(), run.sigma_e, run.report.mean,
                    run.report.mean_std_error, samples_path.c_str());
    }
    return 0;
}

int run_mask_split(int n_freq, double nu, double p, double mu, long long seed,
                   const std::string& out) {
    const CsScheme scheme(n_freq, nu, p, mu);
    Xoshiro256pp rng = substream(seed < 0 ? 0 : static_cast<std::uint64_t>(seed),
                                 stream_tag::kSplit);
    const MaskSplit split = build_split(scheme, rng);
    if (out.empty())
        std::cout << mask_split_to_json(split, scheme);
    else {
        write_mask_split_json(split, scheme, out);
        std::cout << "wrote mask split to " << out << "\n";
    }
    return 0;
}

// ----- verify: the runnable property suite -----

struct VerifyState {
    int failures = 0;

    void check(bool ok, const std::string& name, const std::string& detail) {
        std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        if (!ok) ++failures;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

int run_verify(bool fast) {
    VerifyState v;
    const std::int64_t prop1_samples = fast ? 100000 : 1000000;
    const int n = 100, d = 10;
    const SubspaceModel model = SubspaceModel::make(n, d, 0.1, 0.1, 7);

    // Proposition 1, Monte Carlo.
    {
        GaussianStream g(substream(11, 1));
        std::vector<LinearEstimator> ws;
        for (int k = 0; k < (fast ? 2 : 4); ++k) {
            LinearEstimator est = LinearEstimator::zero(n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) est.W(i, j) = g() / n;
            ws.push_back(std::move(est));
        }
        const auto results = mc_prop1_check(ws, model, prop1_samples, 123);
        bool ok = true;
        double worst = 0;
        for (const auto& r : results) {
            ok = ok && r.holds();
            worst = std::max(worst, std::abs(r.gap) / r.std_error);
        }
        v.check(ok, "prop1-monte-carlo",
                "max |gap|/se = " + fmt(worst) + " over " + std::to_string(ws.size()) +
                    " estimators, " + std::to_string(prop1_samples) + " pairs");
    }

    // Proposition 2, exact.
    {
        const int len = 64;
        const Eigen::MatrixXcd dft = unitary_dft_matrix(len);
        GaussianStream g(substream(13, 2));
        double worst = 0;
        const int cases = fast ? 20 : 100;
        for (int c = 0; c < cases; ++c) {
            Eigen::VectorXcd a(len), x(len);
            for (int i = 0; i < len; ++i) {
                a(i) = std::complex<double>(g(), g());
                x(i) = std::complex<double>(g(), g());
            }
            Eigen::VectorXd prob = Eigen::VectorXd::Constant(len, 0.3);
            prob.segment(28, 8).setOnes();
            worst = std::max(worst, prop2_exact_check(a, x, prob, dft));
        }
        v.check(worst < 1e-10, "prop2-exact", "max residual " + fmt(worst));
    }

    // Gradient against central finite differences.
    {
        const SubspaceModel small = SubspaceModel::make(20, 4, 0.1, 0.1, 3);
        LinearEstimator est = LinearEstimator::zero(20);
        GaussianStream g(substream(17, 3));
        for (int j = 0; j < 20; ++j)
            for (int i = 0; i < 20; ++i) est.W(i, j) = g() * 0.3;
        const Eigen::MatrixXd grad = risk_gradient(est, small);
        Xoshiro256pp pick = substream(19, 4);
        double worst = 0;
        const double h = 1e-6;
        for (int c = 0; c < 50; ++c) {
            const int i = static_cast<int>(pick() % 20), j = static_cast<int>(pick() % 20);
            LinearEstimator plus = est, minus = est;
            plus.W(i, j) += h;
            minus.W(i, j) -= h;
            const double fd =
                (risk_closed_form(plus, small) - risk_closed_form(minus, small)) / (2 * h);
            worst = std::max(worst, std::abs(fd - grad(i, j)) /
                                        std::max(1.0, std::abs(grad(i, j))));
        }
        v.check(worst < 1e-6, "risk-gradient-fd", "max rel err " + fmt(worst));
    }

    // Stochastic gradient unbiasedness.
    {
        LinearEstimator est = optimal_estimator(model);
        est.W *= 0.7;
        const auto r = mc_n2n_gradient_mean(est, model, fast ? 30000 : 100000, 31);
        v.check(r.holds(), "n2n-gradient-unbiased",
                "||mean G - grad R||_F = " + fmt(r.frobenius_distance) + " vs 3 se " +
                    fmt(3 * r.std_error));
    }

    // Theorem-1 bound domination for one-pass SGM.
    {
        const SgmSchedule schedule = SgmSchedule::lemma1(BoundConstants::for_model(model));
        bool ok = true;
        std::string detail;
        for (int n_train : {10, 100, fast ? 300 : 1000}) {
            double mean_risk = 0;
            const int trials = fast ? 2 : 5;
            for (int t = 0; t < trials; ++t) {
                const Dataset ds = make_dataset(
                    model, n_train, substream(41, stream_tag::kTrain, t)());
                const TrainReport report =
                    sgm_single_pass(ds, schedule, LinearEstimator::zero(n));
                mean_risk += risk_closed_form(report.final_W, model);
            }
            mean_risk /= trials;
            const double bound = theorem1_bound(model, n_train);
            ok = ok && mean_risk <= bound;
            detail += "N=" + std::to_string(n_train) + ": " + fmt(mean_risk) + "<=" +
                      fmt(bound) + " ";
        }
        v.check(ok, "theorem1-domination", detail);
    }

    // Second-moment boundedness, reported for both readings of M.
    {
        LinearEstimator probe = optimal_estimator(model);
        probe.W(3, 5) += 1.0;  // distance 1 from W*
        for (auto reading : {BoundConstants::MReading::MSquaredIsTenOverD,
                             BoundConstants::MReading::MIsTenOverD}) {
            const BoundConstants constants = BoundConstants::for_model(model, reading);
            const SecondMomentReport r =
                second_moment_check(probe, model, constants, fast ? 10000 : 100000, 53);
            std::printf("[INFO]  second-moment check (%s): E||G||^2 = %s vs "
                        "M^2 d^2 + B^2 = %s -> %s\n",
                        reading == BoundConstants::MReading::MSquaredIsTenOverD
                            ? "M^2 = 10/d"
                            : "M = 10/d",
                        fmt(r.lhs).c_str(), fmt(r.rhs).c_str(),
                        r.holds ? "holds" : "does not hold");
        }
    }

    // Splitter statistics at the canonical scheme.
    {
        const CsScheme scheme(1000, 0.08, 0.25, 0.33);
        const int draws = fast ? 2000 : 10000;
        Xoshiro256pp rng = substream(43, stream_tag::kSplit);
        double overlap_sum = 0;
        int non_center = 0;
        bool weights_ok = true;
        const double expected_weight = 1.0 / std::sqrt(scheme.q);
        for (int t = 0; t < draws; ++t) {
            const MaskSplit split = build_split(scheme, rng);
            int overlap = 0;
            non_center = 0;
            for (int j = 0; j < scheme.n_freq; ++j) {
                if (split.is_center(j)) {
                    weights_ok = weights_ok && split.weights(j) == 1.0;
                    continue;
                }
                ++non_center;
                weights_ok = weights_ok && split.weights(j) == expected_weight;
                if (split.m_input[j] && split.m_target[j]) ++overlap;
            }
            overlap_sum += static_cast<double>(overlap) / non_center;
        }
        const double mean_overlap = overlap_sum / draws;
        const double target = scheme.p_prime * scheme.q;
        // Binomial-scale standard error for the thinned overlap count.
        const double se = std::sqrt(target * (1 - target) / (non_center * double(draws)));
        const bool ok = weights_ok && std::abs(mean_overlap - target) < 3 * se;
        v.check(ok, "splitter-statistics",
                "mean overlap fraction " + fmt(mean_overlap) + " vs p'q " + fmt(target) +
                    " (3 se " + fmt(3 * se) + "), weights " +
                    (weights_ok ? "exact" : "WRONG"));
    }

    std::printf("%s\n", v.failures == 0 ? "verify: all checks passed"
                                        : "verify: FAILURES PRESENT");
    return v.failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for the sample complexity of self-supervised "
                 "linear reconstruction"};
    app.require_subcommand(1);

    SweepFlags sweep_flags;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a risk-vs-N sweep, emit CSV");
    add_sweep_flags(sweep_cmd, sweep_flags);

    std::string fit_in, fit_group = "param";
    CLI::App* fit_cmd = app.add_subcommand("fit-rate", "log-log rate fit of a sweep CSV");
    fit_cmd->add_option("--in", fit_in, "sweep CSV")->required();
    fit_cmd->add_option("--group", fit_group, "grouping column (param)");

    CLI::App* verify_cmd = app.add_subcommand("verify", "run the property suite");
    bool verify_fast = false;
    verify_cmd->add_flag("--fast", verify_fast, "smaller sample sizes");

    SweepFlags gv_flags;
    CLI::App* gv_cmd =
        app.add_subcommand("grad-var", "normalized stochastic-gradient variance reports");
    add_sweep_flags(gv_cmd, gv_flags);

    int ms_n_freq = 0;
    double ms_nu = 0.08, ms_p = 0.25, ms_mu = 0.33;
    long long ms_seed = -1;
    std::string ms_out;
    CLI::App* ms_cmd = app.add_subcommand("mask-split", "draw one measurement split");
    ms_cmd->add_option("--n-freq", ms_n_freq, "number of frequency columns")->required();
    ms_cmd->add_option("--nu", ms_nu, "center fraction");
    ms_cmd->add_option("--p", ms_p, "input fraction");
    ms_cmd->add_option("--mu", ms_mu, "acquisition fraction");
    ms_cmd->add_option("--seed", ms_seed, "seed");
    ms_cmd->add_option("--out", ms_out, "output JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sweep_cmd->parsed()) return run_sweep_command(sweep_flags);
        if (fit_cmd->parsed()) return run_fit_rate(fit_in, fit_group);
        if (verify_cmd->parsed()) return run_verify(verify_fast);
        if (gv_cmd->parsed()) return run_grad_var_command(gv_flags);
        if (ms_cmd->parsed())
            return run_mask_split(ms_n_freq, ms_nu, ms_p, ms_mu, ms_seed, ms_out);
    } catch (const DivergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
