#include "ssrecon/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ssrecon/errors.hpp"
#include "ssrecon/training.hpp"

namespace ssrecon {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Runs fn(0..count-1) on up to `workers` threads. Cells own disjoint output
/// slots, so results are identical at any worker count.
void parallel_cells(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int resolve_workers(const SweepConfig& config) {
    if (config.workers > 0) return config.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Moment accumulator with snapshots at the nested prefix sizes.
struct MomentSnapshots {
    std::vector<int> sizes;
    std::vector<QuadraticObjective> at_size;
};

MomentSnapshots accumulate_moments(const SubspaceModel& model, std::uint64_t seed,
                                   const std::vector<int>& sizes, Target target) {
    const int n = model.n;
    MomentSnapshots out;
    out.sizes = sizes;
    Eigen::MatrixXd yy = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd ty = Eigen::MatrixXd::Zero(n, n);
    double t_sq = 0;
    std::size_t snap = 0;
    const int total = sizes.back();
    for (int i = 0; i < total && snap < sizes.size(); ++i) {
        const SamplePair pair = sample_pair_at(model, seed, i);
        const Eigen::VectorXd& t = (target == Target::Clean) ? pair.x : pair.y_prime;
        yy.noalias() += pair.y * pair.y.transpose();
        ty.noalias() += t * pair.y.transpose();
        t_sq += t.squaredNorm();
        while (snap < sizes.size() && sizes[snap] == i + 1) {
            QuadraticObjective obj;
            const double inv = 1.0 / sizes[snap];
            obj.input_moment = yy * inv;
            obj.cross_moment = ty * inv;
            obj.target_sq_mean = t_sq * inv;
            out.at_size.push_back(std::move(obj));
            ++snap;
        }
    }
    return out;
}

int validation_size_for(int n_train) { return std::max(50, n_train / 5); }

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::DenoiseSgm: return "denoise-sgm";
        case ExperimentKind::DenoiseGd: return "denoise-gd";
        case ExperimentKind::CsLinear: return "cs-linear";
        case ExperimentKind::GradVar: return "grad-var";
    }
    return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
    if (name == "denoise-sgm") return ExperimentKind::DenoiseSgm;
    if (name == "denoise-gd") return ExperimentKind::DenoiseGd;
    if (name == "cs-linear") return ExperimentKind::CsLinear;
    if (name == "grad-var") return ExperimentKind::GradVar;
    throw std::invalid_argument("unknown experiment '" + name +
                                "' (expected denoise-sgm, denoise-gd, cs-linear or "
                                "grad-var)");
}

void SweepConfig::validate() const {
    if (n <= 0) throw std::invalid_argument("n is required");
    if (d <= 0) throw std::invalid_argument("d is required");
    if (d > n)
        throw std::invalid_argument("invalid dimensions: d must satisfy 1 <= d <= n");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (workers < 0) throw std::invalid_argument("workers must be >= 0");

    const bool needs_sizes = experiment != ExperimentKind::GradVar;
    if (needs_sizes) {
        if (train_sizes.empty()) throw std::invalid_argument("train_sizes is required");
        for (std::size_t i = 0; i < train_sizes.size(); ++i) {
            if (train_sizes[i] < 1)
                throw std::invalid_argument("train_sizes must be positive");
            if (i > 0 && train_sizes[i] <= train_sizes[i - 1])
                throw std::invalid_argument("train_sizes must be strictly increasing");
        }
    }

    if (experiment == ExperimentKind::CsLinear) {
        if (mu.empty()) throw std::invalid_argument("mu is required for cs-linear");
        for (double m : mu) derived_fractions(nu, p, m);  // throws when out of order
    } else {
        if (sigma_z < 0) throw std::invalid_argument("sigma_z is required");
        if (sigma_e.empty()) throw std::invalid_argument("sigma_e is required");
        for (double se : sigma_e)
            if (se < 0) throw std::invalid_argument("sigma_e values must be >= 0");
        if (experiment == ExperimentKind::DenoiseSgm && sigma_z == 0)
            throw std::invalid_argument(
                "denoise-sgm requires sigma_z > 0 (the Lemma-1 schedule needs strong "
                "convexity)");
        if (experiment == ExperimentKind::GradVar && samples < 100)
            throw std::invalid_argument("samples must be >= 100 for grad-var");
    }
}

SweepConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_config_json(buffer.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(e.what()) + " (in " + path + ")");
    }
}

SweepConfig parse_config_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

    static const std::vector<std::string> known = {
        "experiment", "n",       "d",           "sigma_z",    "sigma_e",
        "nu",         "p",       "mu",          "train_sizes", "trials",
        "seed",       "samples", "workers",     "out",        "learning_rate",
        "patience",   "max_epochs", "record_wall_time"};
    std::string unknown;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            unknown += (unknown.empty() ? "" : ", ") + it.key();
    }
    if (!unknown.empty())
        throw std::invalid_argument("unknown config keys: " + unknown);

    auto as_double_list = [](const nlohmann::json& v, const char* key) {
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_array()) {
            for (const auto& x : v) {
                if (!x.is_number())
                    throw std::invalid_argument(std::string(key) + " must be numeric");
                out.push_back(x.get<double>());
            }
        } else {
            throw std::invalid_argument(std::string(key) +
                                        " must be a number or an array of numbers");
        }
        return out;
    };

    SweepConfig config;
    if (j.contains("experiment"))
        config.experiment = experiment_from_string(j["experiment"].get<std::string>());
    if (j.contains("n")) config.n = j["n"].get<int>();
    if (j.contains("d")) config.d = j["d"].get<int>();
    if (j.contains("sigma_z")) config.sigma_z = j["sigma_z"].get<double>();
    if (j.contains("sigma_e")) config.sigma_e = as_double_list(j["sigma_e"], "sigma_e");
    if (j.contains("nu")) config.nu = j["nu"].get<double>();
    if (j.contains("p")) config.p = j["p"].get<double>();
    if (j.contains("mu")) config.mu = as_double_list(j["mu"], "mu");
    if (j.contains("train_sizes")) {
        if (!j["train_sizes"].is_array())
            throw std::invalid_argument("train_sizes must be an array of integers");
        config.train_sizes.clear();
        for (const auto& x : j["train_sizes"]) config.train_sizes.push_back(x.get<int>());
    }
    if (j.contains("trials")) config.trials = j["trials"].get<int>();
    if (j.contains("seed")) {
        config.seed = j["seed"].get<std::uint64_t>();
        config.seed_set = true;
    }
    if (j.contains("samples")) config.samples = j["samples"].get<int>();
    if (j.contains("workers")) config.workers = j["workers"].get<int>();
    if (j.contains("out")) config.out = j["out"].get<std::string>();
    if (j.contains("learning_rate")) config.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("patience")) config.patience = j["patience"].get<int>();
    if (j.contains("max_epochs")) config.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("record_wall_time"))
        config.record_wall_time = j["record_wall_time"].get<bool>();
    return config;
}

namespace {

SweepResult run_denoise_sweep(const SweepConfig& config) {
    const bool use_gd = config.experiment == ExperimentKind::DenoiseGd;
    const SubspaceModel base =
        SubspaceModel::make(config.n, config.d, config.sigma_z, 0.0, config.seed);
    const int arms = static_cast<int>(config.sigma_e.size());
    const int cells = arms * config.trials;
    std::vector<std::vector<SweepRow>> cell_rows(cells);

    parallel_cells(cells, resolve_workers(config), [&](int cell) {
        const int arm = cell / config.trials;
        const int trial = cell % config.trials;
        const double sigma_e = config.sigma_e[arm];
        const SubspaceModel model = base.with_sigma_e(sigma_e);
        // The pair substream is shared across sigma_e arms: same signals and
        // input noise, target noise scaled per arm.
        const std::uint64_t train_seed = substream(config.seed, stream_tag::kTrain,
                                                   static_cast<std::uint64_t>(trial))();
        const std::uint64_t val_seed = substream(config.seed, stream_tag::kValidation,
                                                 static_cast<std::uint64_t>(trial))();

        MomentSnapshots train_moments;
        MomentSnapshots val_moments;
        std::vector<int> val_sizes;
        if (use_gd) {
            train_moments =
                accumulate_moments(model, train_seed, config.train_sizes, Target::Noisy);
            for (int n_train : config.train_sizes)
                val_sizes.push_back(validation_size_for(n_train));
            std::sort(val_sizes.begin(), val_sizes.end());
            val_sizes.erase(std::unique(val_sizes.begin(), val_sizes.end()),
                            val_sizes.end());
            val_moments = accumulate_moments(model, val_seed, val_sizes, Target::Noisy);
        }

        auto& rows = cell_rows[cell];
        for (std::size_t size_idx = 0; size_idx < config.train_sizes.size(); ++size_idx) {
            const int n_train = config.train_sizes[size_idx];
            SweepRow row;
            row.experiment = to_string(config.experiment);
            row.n_train = n_train;
            row.trial = trial;
            row.param = sigma_e;
            row.optimal_risk = optimal_risk(model);
            row.bound = (config.sigma_z > 0 && n_train >= 3)
                            ? theorem1_bound(model, n_train)
                            : kNan;
            const auto start = std::chrono::steady_clock::now();
            try {
                TrainReport report;
                if (use_gd) {
                    GdOptions options;
                    options.learning_rate = config.learning_rate;
                    options.patience = config.patience;
                    options.max_epochs = config.max_epochs;
                    const int val_size = validation_size_for(n_train);
                    const std::size_t val_idx = static_cast<std::size_t>(
                        std::find(val_sizes.begin(), val_sizes.end(), val_size) -
                        val_sizes.begin());
                    report = gd_early_stopped(train_moments.at_size[size_idx],
                                              val_moments.at_size[val_idx], options,
                                              nullptr);
                } else {
                    const Dataset dataset = make_dataset(model, n_train, train_seed);
                    const SgmSchedule schedule =
                        SgmSchedule::lemma1(BoundConstants::for_model(model));
                    report = sgm_single_pass(dataset, schedule,
                                             LinearEstimator::zero(model.n));
                }
                row.risk = risk_closed_form(report.final_W, model);
                row.excess = row.risk - row.optimal_risk;
            } catch (const DivergenceError& e) {
                row.failed = true;
                row.failure = e.what();
                row.risk = row.excess = kNan;
            }
            row.wall_time_s = config.record_wall_time ? elapsed_seconds(start) : 0.0;
            rows.push_back(std::move(row));
        }
    });

    SweepResult result;
    for (auto& rows : cell_rows)
        for (auto& row : rows) result.rows.push_back(std::move(row));
    return result;
}

SweepResult run_cs_sweep(const SweepConfig& config) {
    const CsSignalModel model = CsSignalModel::make(config.n, config.d, config.seed);
    // One arm per mu (self-supervised) plus the supervised arm, written as
    // param = 1 (at mu = 1 the weighted loss equals the supervised loss).
    struct Arm {
        double param;
        CsTrainMode mode;
        double mu;
    };
    std::vector<Arm> arms;
    for (double mu : config.mu) arms.push_back({mu, CsTrainMode::SelfSupervised, mu});
    arms.push_back({1.0, CsTrainMode::Supervised, config.mu.front()});

    struct Cell {
        int arm, trial, size_idx;
    };
    std::vector<Cell> cells;
    for (int a = 0; a < static_cast<int>(arms.size()); ++a)
        for (int t = 0; t < config.trials; ++t)
            for (int s = 0; s < static_cast<int>(config.train_sizes.size()); ++s)
                cells.push_back({a, t, s});
    std::vector<SweepRow> rows(cells.size());

    // The population-optimal linear reconstruction risk depends only on the
    // input-mask distribution (nu, p), not on mu.
    const CsScheme base_scheme(config.n, config.nu, config.p, config.mu.front());
    const double opt_risk = cs_population_optimal(model, base_scheme).risk;

    const int test_size = 2000;
    parallel_cells(static_cast<int>(cells.size()), resolve_workers(config), [&](int c) {
        const Cell& cell = cells[c];
        const Arm& arm = arms[cell.arm];
        const int n_train = config.train_sizes[cell.size_idx];
        const CsScheme scheme(config.n, config.nu, config.p, arm.mu);
        const std::uint64_t train_seed = substream(
            config.seed, stream_tag::kTrain, static_cast<std::uint64_t>(cell.trial))();
        const std::uint64_t test_seed = substream(
            config.seed, stream_tag::kTest, static_cast<std::uint64_t>(cell.trial))();

        SweepRow& row = rows[c];
        row.experiment = arm.mode == CsTrainMode::Supervised ? "cs-linear-supervised"
                                                             : "cs-linear";
        row.n_train = n_train;
        row.trial = cell.trial;
        row.param = arm.param;
        row.optimal_risk = opt_risk;
        row.bound = kNan;
        const auto start = std::chrono::steady_clock::now();
        try {
            CsTrainOptions options;
            options.learning_rate = config.learning_rate;
            options.patience = config.patience;
            options.max_epochs = config.max_epochs;
            const CsTrainReport report =
                train_cs_linear(model, scheme, n_train, arm.mode, train_seed, options);
            const CsBatch test = make_cs_batch(model, base_scheme, test_size, test_seed);
            row.risk = cs_risk(report.v, test);
            row.excess = row.risk - row.optimal_risk;
        } catch (const DivergenceError& e) {
            row.failed = true;
            row.failure = e.what();
            row.risk = row.excess = kNan;
        }
        row.wall_time_s = config.record_wall_time ? elapsed_seconds(start) : 0.0;
    });

    SweepResult result;
    result.rows = std::move(rows);
    return result;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
    config.validate();
    switch (config.experiment) {
        case ExperimentKind::DenoiseGd:
        case ExperimentKind::DenoiseSgm:
            return run_denoise_sweep(config);
        case ExperimentKind::CsLinear:
            return run_cs_sweep(config);
        case ExperimentKind::GradVar:
            throw std::invalid_argument(
                "grad-var produces variance reports, not sweep rows; use run_grad_var "
                "(CLI: the grad-var subcommand)");
    }
    throw std::invalid_argument("unhandled experiment kind");
}

std::vector<double> result_params(const SweepResult& result) {
    std::vector<double> params;
    for (const SweepRow& row : result.rows)
        if (std::find(params.begin(), params.end(), row.param) == params.end())
            params.push_back(row.param);
    return params;
}

RateFit fit_rate(const SweepResult& result, double param) {
    std::map<int, std::pair<double, int>> accum;  // N -> (sum excess, count)
    for (const SweepRow& row : result.rows) {
        if (row.failed || row.param != param || !std::isfinite(row.excess)) continue;
        auto& slot = accum[row.n_train];
        slot.first += row.excess;
        slot.second += 1;
    }
    RateFit fit;
    std::vector<double> log_n, log_excess;
    for (const auto& [n_train, slot] : accum) {
        const double mean = slot.first / slot.second;
        if (mean <= 0) {
            fit.excluded_sizes.push_back(n_train);
            continue;
        }
        log_n.push_back(std::log(static_cast<double>(n_train)));
        log_excess.push_back(std::log(mean));
    }
    if (log_n.size() < 3)
        throw std::invalid_argument(
            "fit_rate needs at least 3 training sizes with positive mean excess");

    const std::size_t count = log_n.size();
    double mean_x = 0, mean_y = 0;
    for (std::size_t i = 0; i < count; ++i) {
        mean_x += log_n[i];
        mean_y += log_excess[i];
    }
    mean_x /= count;
    mean_y /= count;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double dx = log_n[i] - mean_x;
        const double dy = log_excess[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ss_res = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double r = log_excess[i] - (fit.intercept + fit.slope * log_n[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

std::vector<GradVarRun> run_grad_var(const SweepConfig& config) {
    config.validate();
    const SubspaceModel base =
        SubspaceModel::make(config.n, config.d, config.sigma_z, 0.0, config.seed);
    const std::uint64_t data_seed = substream(config.seed, stream_tag::kTrain, 0)();

    // Evaluation point: one supervised full-batch epoch from zero. It depends
    // only on (x, y), which the sigma_e arms share.
    const Dataset base_dataset = make_dataset(base, config.samples, data_seed);
    const LinearEstimator eval_point = one_epoch_supervised_gd(base_dataset);

    std::vector<GradVarRun> runs;
    runs.push_back(
        {0.0, normalized_gradient_variances(eval_point, base_dataset, GradLoss::Supervised)});
    for (double sigma_e : config.sigma_e) {
        const Dataset dataset =
            make_dataset(base.with_sigma_e(sigma_e), config.samples, data_seed);
        runs.push_back({sigma_e, normalized_gradient_variances(eval_point, dataset,
                                                               GradLoss::Noise2Noise)});
    }
    return runs;
}

}  // namespace ssrecon
