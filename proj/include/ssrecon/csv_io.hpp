#pragma once

#include <string>

#include "ssrecon/cs_masks.hpp"
#include "ssrecon/experiments.hpp"

namespace ssrecon {

/// Writes rows sorted by (param, N, trial, experiment) under the fixed header
/// `experiment,N,trial,param,risk,optimal_risk,excess,bound,wall_time_s`,
/// floats with 17 significant digits. Failed rows carry nan numeric fields.
void emit_csv(const SweepResult& result, const std::string& path);

std::string csv_to_string(const SweepResult& result);

/// Strict inverse of emit_csv (header checked; values round-trip exactly).
SweepResult parse_csv(const std::string& path);
SweepResult parse_csv_string(const std::string& text);

/// Per-sample CSV `loss_label,sample_index,normalized_variance` plus a
/// histogram CSV `bin_left,bin_right,count` next to it.
void write_grad_var_csv(const GradVarReport& report, const std::string& samples_path,
                        const std::string& histogram_path);

/// Mask split as JSON: scheme fractions, the three 0/1 mask arrays, inclusion
/// probabilities and weights.
std::string mask_split_to_json(const MaskSplit& split, const CsScheme& scheme);
void write_mask_split_json(const MaskSplit& split, const CsScheme& scheme,
                           const std::string& path);

}  // namespace ssrecon
