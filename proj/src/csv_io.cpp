#include "ssrecon/csv_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ssrecon/errors.hpp"

namespace ssrecon {

namespace {

constexpr const char* kHeader =
    "experiment,N,trial,param,risk,optimal_risk,excess,bound,wall_time_s";

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

std::string csv_to_string(const SweepResult& result) {
    std::vector<const SweepRow*> sorted;
    sorted.reserve(result.rows.size());
    for (const SweepRow& row : result.rows) sorted.push_back(&row);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SweepRow* a, const SweepRow* b) {
                         if (a->param != b->param) return a->param < b->param;
                         if (a->n_train != b->n_train) return a->n_train < b->n_train;
                         if (a->trial != b->trial) return a->trial < b->trial;
                         return a->experiment < b->experiment;
                     });
    std::string out = kHeader;
    out += '\n';
    for (const SweepRow* row : sorted) {
        out += row->experiment;
        out += ',' + std::to_string(row->n_train);
        out += ',' + std::to_string(row->trial);
        out += ',' + format_double(row->param);
        out += ',' + format_double(row->risk);
        out += ',' + format_double(row->optimal_risk);
        out += ',' + format_double(row->excess);
        out += ',' + format_double(row->bound);
        out += ',' + format_double(row->wall_time_s);
        out += '\n';
    }
    return out;
}

void emit_csv(const SweepResult& result, const std::string& path) {
    write_file(path, csv_to_string(result));
}

SweepResult parse_csv_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw std::invalid_argument("unexpected CSV header: " + line);

    SweepResult result;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != 9)
            throw std::invalid_argument("malformed CSV row: " + line);
        SweepRow row;
        row.experiment = fields[0];
        row.n_train = std::atoi(fields[1].c_str());
        row.trial = std::atoi(fields[2].c_str());
        row.param = std::strtod(fields[3].c_str(), nullptr);
        row.risk = std::strtod(fields[4].c_str(), nullptr);
        row.optimal_risk = std::strtod(fields[5].c_str(), nullptr);
        row.excess = std::strtod(fields[6].c_str(), nullptr);
        row.bound = std::strtod(fields[7].c_str(), nullptr);
        row.wall_time_s = std::strtod(fields[8].c_str(), nullptr);
        row.failed = !std::isfinite(row.risk);
        result.rows.push_back(std::move(row));
    }
    return result;
}

SweepResult parse_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open CSV: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv_string(buffer.str());
}

void write_grad_var_csv(const GradVarReport& report, const std::string& samples_path,
                        const std::string& histogram_path) {
    std::string samples = "loss_label,sample_index,normalized_variance\n";
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        samples += report.loss_label;
        samples += ',' + std::to_string(i);
        samples += ',' + format_double(report.per_sample[i]);
        samples += '\n';
    }
    write_file(samples_path, samples);

    std::string hist = "bin_left,bin_right,count\n";
    for (const HistBin& bin : report.histogram) {
        hist += format_double(bin.left);
        hist += ',' + format_double(bin.right);
        hist += ',' + std::to_string(bin.count);
        hist += '\n';
    }
    write_file(histogram_path, hist);
}

std::string mask_split_to_json(const MaskSplit& split, const CsScheme& scheme) {
    nlohmann::json j;
    j["n_freq"] = scheme.n_freq;
    j["nu"] = scheme.nu;
    j["p"] = scheme.p;
    j["mu"] = scheme.mu;
    j["p_prime"] = scheme.p_prime;
    j["q"] = scheme.q;
    j["center_begin"] = split.center_begin;
    j["center_count"] = split.center_count;
    j["m_tilde"] = split.m_tilde;
    j["m_input"] = split.m_input;
    j["m_target"] = split.m_target;
    j["inclusion_prob"] = std::vector<double>(
        split.inclusion_prob.data(), split.inclusion_prob.data() + split.inclusion_prob.size());
    j["weights"] = std::vector<double>(split.weights.data(),
                                       split.weights.data() + split.weights.size());
    return j.dump(2) + "\n";
}

void write_mask_split_json(const MaskSplit& split, const CsScheme& scheme,
                           const std::string& path) {
    write_file(path, mask_split_to_json(split, scheme));
}

}  // namespace ssrecon
