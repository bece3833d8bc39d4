/*
 * Copyright 2026 The crossalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossalign/zsl.hpp"

namespace crossalign {

nlohmann::json metrics_to_json(const Metrics& m);

/// {mode, ratio, master_seed, per_split: [...], mean, std, config_echo}.
nlohmann::json experiment_report_json(const ExperimentReport& report,
                                      const nlohmann::json& config_echo);

/// One JSON-lines record per optimizer step; skipped terms are null.
nlohmann::json step_log_line(std::size_t split, const StepRecord& record);
/// Per-epoch summary record ("kind": "epoch").
nlohmann::json epoch_log_line(std::size_t split, const EpochRecord& record);
EpochRecord epoch_from_log_line(const nlohmann::json& line);

/// {"rows": [{variant, vtov, vtos, stov, zsl, gzsl, zsl_std, gzsl_std}], "config_echo"}.
nlohmann::json ablation_report_json(const std::vector<AblationRow>& rows,
                                    const nlohmann::json& config_echo);

/// Small-multiple SVG: one panel per loss term, one polyline per split.
std::string loss_curve_svg(const std::vector<std::vector<EpochRecord>>& per_split);
/// Grouped bars: one group per variant, ZSL accuracy and GZSL harmonic mean.
std::string ablation_bar_svg(const nlohmann::json& ablation_report);

/// Plain-text tables for the report command.
std::string format_experiment_table(const nlohmann::json& report);
std::string format_ablation_table(const nlohmann::json& ablation_report);

}  // namespace crossalign
