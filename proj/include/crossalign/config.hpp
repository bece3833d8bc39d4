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

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "crossalign/data.hpp"
#include "crossalign/train.hpp"

namespace crossalign {

/// Everything one CLI run needs. Loaded from a preset, then patched by a JSON
/// config file, then by command-line flags.
struct RunConfig {
  std::string preset = "zsl";
  Mode mode = Mode::kZsl;
  HyperParams hp = preset_zsl();

  /// Exactly one data source: the synthetic generator or a pair of feature files.
  bool synthetic = true;
  SynthConfig synth;
  /// When false the generator seed is derived from `seed` via the data stream.
  bool synth_seed_explicit = false;
  std::filesystem::path visual_path;
  std::filesystem::path descriptor_path;

  SplitRatio ratio{16, 4};
  std::size_t num_splits = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "run";
  /// Replace latent and hidden widths with scale_model_to_features() once the
  /// feature widths are known.
  bool scale_model = false;

  SynthConfig resolved_synth() const;

  /// Rejects any out-of-domain parameter before computation starts.
  void validate() const;

  nlohmann::json to_json() const;
  /// Starts from the preset named in `j` (default "zsl") and applies every other key.
  static RunConfig from_json(const nlohmann::json& j);
  /// Applies the keys of `j` (except "preset") on top of this config.
  void apply(const nlohmann::json& j);
  void apply_preset(const std::string& name);
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Model widths proportioned to small feature tables: latent = max(4, Dv / 2),
/// hidden widths twice the feature widths.
void scale_model_to_features(HyperParams& hp, std::size_t visual_dim, std::size_t semantic_dim);

/// Loads or generates the table named by the config.
FeatureTable load_run_data(const RunConfig& cfg);

nlohmann::json synth_to_json(const SynthConfig& cfg);
SynthConfig synth_from_json(const nlohmann::json& j, SynthConfig base = {});

}  // namespace crossalign
