#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "ssrecon/csv_io.hpp"
#include "ssrecon/experiments.hpp"

using namespace ssrecon;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = std::string("test_tmp_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

SweepConfig tiny_gd_config() {
    SweepConfig config;
    config.experiment = ExperimentKind::DenoiseGd;
    config.n = 30;
    config.d = 4;
    config.sigma_z = 0.1;
    config.sigma_e = {0.0, 0.1};
    config.train_sizes = {10, 40};
    config.trials = 2;
    config.seed = 3;
    config.max_epochs = 200;
    return config;
}

}  // namespace

TEST_CASE("config parsing: defaults, unknown keys, required fields") {
    const std::string path = write_temp(
        "config.json",
        R"({"experiment":"denoise-gd","n":100,"d":10,"sigma_z":0.1,
            "sigma_e":[0,0.1,0.2],"train_sizes":[10,100]})");
    const SweepConfig config = parse_config_file(path);
    CHECK(config.trials == 5);
    CHECK(config.seed == 0);
    CHECK(!config.seed_set);
    CHECK(config.sigma_e.size() == 3);
    config.validate();
    std::remove(path.c_str());

    const std::string bad = write_temp("bad.json", R"({"n":10,"dd":3,"zig":1})");
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_config_file(bad)),
                         doctest::Contains("unknown config keys"),
                         std::invalid_argument);
    try {
        parse_config_file(bad);
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find("dd") != std::string::npos);
        CHECK(what.find("zig") != std::string::npos);
    }
    std::remove(bad.c_str());
}

TEST_CASE("config validation: constraint messages") {
    SweepConfig config;
    config.experiment = ExperimentKind::DenoiseGd;
    CHECK_THROWS_WITH_AS(config.validate(), "n is required", std::invalid_argument);
    config.n = 10;
    CHECK_THROWS_WITH_AS(config.validate(), "d is required", std::invalid_argument);
    config.d = 20;
    CHECK_THROWS_WITH_AS(config.validate(),
                         "invalid dimensions: d must satisfy 1 <= d <= n",
                         std::invalid_argument);
    config.d = 2;
    config.sigma_z = 0.1;
    config.sigma_e = {0.1};
    CHECK_THROWS_WITH_AS(config.validate(), "train_sizes is required",
                         std::invalid_argument);
    config.train_sizes = {10, 10};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.train_sizes = {10, 20};
    config.validate();
}

TEST_CASE("denoise-gd sweep: row semantics") {
    SweepConfig config = tiny_gd_config();
    config.trials = 1;
    config.train_sizes = {10};
    config.sigma_e = {0.0};
    const SweepResult result = run_sweep(config);
    REQUIRE(result.rows.size() == 1);
    const SweepRow& row = result.rows[0];
    CHECK(row.experiment == "denoise-gd");
    CHECK(row.n_train == 10);
    CHECK(!row.failed);
    CHECK(row.risk >= row.optimal_risk);
    CHECK(row.excess >= -1e-12);
    CHECK(row.excess == row.risk - row.optimal_risk);
    CHECK(row.bound > row.risk);
}

TEST_CASE("sweeps are deterministic across runs and worker counts") {
    SweepConfig config = tiny_gd_config();
    config.workers = 1;
    const SweepResult first = run_sweep(config);
    const std::string once = csv_to_string(first);
    const std::string twice = csv_to_string(run_sweep(config));
    CHECK(once == twice);
    config.workers = 4;
    const std::string parallel = csv_to_string(run_sweep(config));
    CHECK(once == parallel);

    for (const SweepRow& row : first.rows) {
        CHECK(row.excess >= -1e-12);
        CHECK(row.excess == row.risk - row.optimal_risk);
    }
}

TEST_CASE("denoise-sgm sweep produces bound columns") {
    SweepConfig config = tiny_gd_config();
    config.experiment = ExperimentKind::DenoiseSgm;
    config.train_sizes = {10, 30};
    const SweepResult result = run_sweep(config);
    CHECK(result.rows.size() == 2 * 2 * 2);
    for (const SweepRow& row : result.rows) {
        CHECK(!row.failed);
        CHECK(std::isfinite(row.risk));
        CHECK(row.bound > 0);
        CHECK(row.risk <= row.bound);
    }
}

TEST_CASE("cs sweep is deterministic across worker counts") {
    SweepConfig config;
    config.experiment = ExperimentKind::CsLinear;
    config.n = 100;
    config.d = 10;
    config.mu = {0.33};
    config.train_sizes = {40, 80};
    config.trials = 2;
    config.seed = 9;
    config.max_epochs = 30;
    config.workers = 1;
    const std::string serial = csv_to_string(run_sweep(config));
    config.workers = 4;
    CHECK(serial == csv_to_string(run_sweep(config)));
}

TEST_CASE("cs sweep: arms, params and optimal risk column") {
    SweepConfig config;
    config.experiment = ExperimentKind::CsLinear;
    config.n = 100;
    config.d = 10;
    config.mu = {0.33};
    config.train_sizes = {60};
    config.trials = 1;
    config.seed = 5;
    config.max_epochs = 50;
    const SweepResult result = run_sweep(config);
    REQUIRE(result.rows.size() == 2);  // self-supervised + supervised arm
    bool saw_ss = false, saw_sup = false;
    for (const SweepRow& row : result.rows) {
        CHECK(!row.failed);
        CHECK(row.optimal_risk > 0);
        CHECK(row.risk > row.optimal_risk * 0.5);
        CHECK(std::isnan(row.bound));
        if (row.experiment == "cs-linear") {
            saw_ss = true;
            CHECK(row.param == 0.33);
        }
        if (row.experiment == "cs-linear-supervised") {
            saw_sup = true;
            CHECK(row.param == 1.0);
        }
    }
    CHECK(saw_ss);
    CHECK(saw_sup);
}

TEST_CASE("grad-var experiment returns ordered reports") {
    SweepConfig config;
    config.experiment = ExperimentKind::GradVar;
    config.n = 40;
    config.d = 5;
    config.sigma_z = 0.1;
    config.sigma_e = {0.1, 0.2};
    config.samples = 600;
    config.seed = 2;
    const auto runs = run_grad_var(config);
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].report.loss_label == "supervised");
    CHECK(runs[1].sigma_e == 0.1);
    CHECK(runs[2].sigma_e == 0.2);
    CHECK(runs[0].report.mean < runs[1].report.mean);
    CHECK(runs[1].report.mean < runs[2].report.mean);
}

TEST_CASE("emit_csv: header, ordering, empty and single-row outputs") {
    SweepResult empty;
    CHECK(csv_to_string(empty) ==
          "experiment,N,trial,param,risk,optimal_risk,excess,bound,wall_time_s\n");

    SweepResult one;
    SweepRow row;
    row.experiment = "denoise-gd";
    row.n_train = 10;
    row.trial = 0;
    row.param = 0.1;
    row.risk = 0.5;
    row.optimal_risk = 0.25;
    row.excess = 0.25;
    row.bound = 2.0;
    row.wall_time_s = 0.125;
    one.rows.push_back(row);
    const std::string text = csv_to_string(one);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);

    // Rows come out sorted by (param, N, trial).
    SweepResult shuffled;
    for (int trial : {1, 0})
        for (int n : {100, 10})
            for (double param : {0.2, 0.0}) {
                SweepRow r = row;
                r.trial = trial;
                r.n_train = n;
                r.param = param;
                shuffled.rows.push_back(r);
            }
    const SweepResult parsed = parse_csv_string(csv_to_string(shuffled));
    REQUIRE(parsed.rows.size() == 8);
    for (std::size_t i = 1; i < parsed.rows.size(); ++i) {
        const auto& a = parsed.rows[i - 1];
        const auto& b = parsed.rows[i];
        CHECK((a.param < b.param ||
               (a.param == b.param &&
                (a.n_train < b.n_train ||
                 (a.n_train == b.n_train && a.trial <= b.trial)))));
    }
}

TEST_CASE("csv round-trip is byte-exact") {
    SweepConfig config = tiny_gd_config();
    const SweepResult result = run_sweep(config);
    const std::string text = csv_to_string(result);
    const SweepResult parsed = parse_csv_string(text);
    CHECK(csv_to_string(parsed) == text);
    CHECK(parsed.rows.size() == result.rows.size());
}

TEST_CASE("failed rows round-trip as nan and stay marked failed") {
    SweepResult result;
    SweepRow row;
    row.experiment = "denoise-gd";
    row.n_train = 10;
    row.trial = 0;
    row.param = 0.1;
    row.risk = std::numeric_limits<double>::quiet_NaN();
    row.optimal_risk = 0.25;
    row.excess = std::numeric_limits<double>::quiet_NaN();
    row.bound = 12.5;
    row.failed = true;
    result.rows.push_back(row);
    const std::string text = csv_to_string(result);
    CHECK(text.find("nan") != std::string::npos);
    const SweepResult parsed = parse_csv_string(text);
    REQUIRE(parsed.rows.size() == 1);
    CHECK(parsed.rows[0].failed);
    CHECK(std::isnan(parsed.rows[0].risk));
    CHECK(csv_to_string(parsed) == text);
}

TEST_CASE("fit_rate: synthetic power laws and exclusions") {
    auto synthetic = [](auto excess_of_n) {
        SweepResult result;
        for (int n : {10, 30, 100, 300, 1000}) {
            for (int trial = 0; trial < 3; ++trial) {
                SweepRow row;
                row.experiment = "synthetic";
                row.n_train = n;
                row.trial = trial;
                row.param = 0.0;
                row.optimal_risk = 0.0;
                row.excess = excess_of_n(n);
                row.risk = row.excess;
                row.bound = std::numeric_limits<double>::quiet_NaN();
                result.rows.push_back(row);
            }
        }
        return result;
    };

    const RateFit inverse =
        fit_rate(synthetic([](int n) { return 3.0 / n; }), 0.0);
    CHECK(inverse.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(inverse.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    const RateFit half =
        fit_rate(synthetic([](int n) { return 2.0 / std::sqrt(double(n)); }), 0.0);
    CHECK(half.slope == doctest::Approx(-0.5).epsilon(1e-12));

    // Nonpositive mean excess drops that N with a note.
    SweepResult with_zero = synthetic([](int n) { return 3.0 / n; });
    for (auto& row : with_zero.rows)
        if (row.n_train == 30) row.excess = -row.excess;
    const RateFit filtered = fit_rate(with_zero, 0.0);
    REQUIRE(filtered.excluded_sizes.size() == 1);
    CHECK(filtered.excluded_sizes[0] == 30);
    CHECK(filtered.slope == doctest::Approx(-1.0).epsilon(1e-12));

    SweepResult too_few;
    CHECK_THROWS_AS(static_cast<void>(fit_rate(too_few, 0.0)), std::invalid_argument);
}

TEST_CASE("grad-var and mask-split file emission") {
    const SubspaceModel model = SubspaceModel::make(30, 4, 0.1, 0.1, 2);
    const Dataset ds = make_dataset(model, 200, 3);
    const GradVarReport report = normalized_gradient_variances(
        one_epoch_supervised_gd(ds), ds, GradLoss::Noise2Noise);
    write_grad_var_csv(report, "test_tmp_gv_samples.csv", "test_tmp_gv_hist.csv");
    {
        std::ifstream in("test_tmp_gv_samples.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "loss_label,sample_index,normalized_variance");
        int lines = 0;
        std::string line;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == 200);
    }
    {
        std::ifstream in("test_tmp_gv_hist.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "bin_left,bin_right,count");
    }
    std::remove("test_tmp_gv_samples.csv");
    std::remove("test_tmp_gv_hist.csv");

    const CsScheme scheme(1000, 0.08, 0.25, 0.33);
    Xoshiro256pp rng = substream(4, 0);
    const MaskSplit split = build_split(scheme, rng);
    const std::string json_text = mask_split_to_json(split, scheme);
    const auto parsed = nlohmann::json::parse(json_text);
    CHECK(parsed["n_freq"] == 1000);
    CHECK(parsed["m_input"].size() == 1000);
    int input_sum = 0;
    for (const auto& v : parsed["m_input"]) input_sum += v.get<int>();
    CHECK(input_sum == 250);
    CHECK(parsed["weights"].size() == 1000);
}
