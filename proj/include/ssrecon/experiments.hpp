#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssrecon/grad_variance.hpp"

namespace ssrecon {

enum class ExperimentKind { DenoiseSgm, DenoiseGd, CsLinear, GradVar };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

struct SweepConfig {
    ExperimentKind experiment = ExperimentKind::DenoiseGd;
    int n = 0;
    int d = 0;
    double sigma_z = -1;
    std::vector<double> sigma_e;  ///< denoise / grad-var arms
    double nu = 0.08;             ///< cs scheme
    double p = 0.25;
    std::vector<double> mu = {0.28, 0.33};
    std::vector<int> train_sizes;
    int trials = 5;
    std::uint64_t seed = 0;
    bool seed_set = false;  ///< whether the file/flags provided a seed
    int samples = 10000;    ///< grad-var estimate size
    int workers = 0;        ///< 0 = hardware concurrency
    std::string out;
    double learning_rate = 0;  ///< 0 = auto
    int patience = 10;
    int max_epochs = 2000;
    /// Off by default: measured times would break the byte-identical-output
    /// guarantee. When off, wall_time_s is emitted as 0.
    bool record_wall_time = false;

    void validate() const;  ///< throws std::invalid_argument naming the constraint
};

/// Reads a JSON config; unknown keys are an error listing them.
SweepConfig parse_config_file(const std::string& path);
SweepConfig parse_config_json(const std::string& text);

struct SweepRow {
    std::string experiment;
    int n_train = 0;
    int trial = 0;
    double param = 0;  ///< sigma_e for denoising, mu for cs (1 = supervised)
    double risk = 0;
    double optimal_risk = 0;
    double excess = 0;
    double bound = 0;  ///< theorem-1 bound where applicable, else NaN
    double wall_time_s = 0;
    bool failed = false;
    std::string failure;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// Runs the configured sweep. One row per (N, trial, arm); deterministic for a
/// fixed (config, seed) at any worker count; training divergence marks the row
/// failed and the sweep continues.
SweepResult run_sweep(const SweepConfig& config);

struct RateFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    std::vector<int> excluded_sizes;  ///< N dropped for nonpositive mean excess
};

/// Least-squares fit of log(trial-mean excess) against log N for the rows with
/// the given param value. Needs >= 3 usable sizes.
RateFit fit_rate(const SweepResult& result, double param);

/// Param values present in a result, in emission order.
std::vector<double> result_params(const SweepResult& result);

struct GradVarRun {
    double sigma_e = 0;
    GradVarReport report;
};

/// The grad-var experiment: supervised variances at sigma_e = 0 plus one
/// noise2noise report per configured sigma_e, all at the same one-epoch W.
std::vector<GradVarRun> run_grad_var(const SweepConfig& config);

}  // namespace ssrecon
