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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossalign/rng.hpp"
#include "crossalign/tensor.hpp"

namespace crossalign {

/// Visual instances with labels plus one semantic descriptor per class.
/// Class ids are dense (0..C-1); `original_ids[c]` is the id found in the source files.
struct FeatureTable {
  Tensor2D visual;
  std::vector<int> labels;
  Tensor2D descriptors;
  std::vector<std::int64_t> original_ids;

  std::size_t num_classes() const noexcept { return descriptors.rows(); }
  std::size_t num_instances() const noexcept { return visual.rows(); }
  std::size_t visual_dim() const noexcept { return visual.cols(); }
  std::size_t semantic_dim() const noexcept { return descriptors.cols(); }

  /// Row indices of each class, ascending.
  std::vector<std::vector<std::size_t>> rows_by_class() const;
  void validate() const;
};

/// Reads `class_id,f0,...` CSV files or the equivalent binary format
/// (detected by its magic bytes).
FeatureTable load_features(const std::filesystem::path& visual_path,
                           const std::filesystem::path& descriptor_path);

/// Writes 17-significant-digit CSV, so load_features reproduces every value exactly.
void write_features_csv(const FeatureTable& table, const std::filesystem::path& visual_path,
                        const std::filesystem::path& descriptor_path);
void write_features_binary(const FeatureTable& table, const std::filesystem::path& visual_path,
                           const std::filesystem::path& descriptor_path);

struct SynthConfig {
  std::size_t num_classes = 20;
  std::size_t instances_per_class = 100;
  std::size_t visual_dim = 32;
  std::size_t semantic_dim = 16;
  std::size_t concept_dim = 8;
  double intra_class_std = 1.0;
  double inter_class_sim = 0.6;
  double label_noise_rate = 0.1;
  double descriptor_noise_std = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Generated table plus the ground truth behind it.
struct SyntheticDataset {
  FeatureTable table;
  Tensor2D prototypes;          // C x visual_dim
  std::vector<int> true_labels; // labels before label noise
};

/// Per class: concept ~ N(0, I); descriptor = fixed linear map of the concept
/// plus small noise; prototype = sqrt(1 - sim) * (visual map of concept) +
/// sqrt(sim) * shared global direction; instances = prototype + N(0, std^2).
/// Exactly round(rate * total) instances then get a uniformly different label.
SyntheticDataset synth_dataset_with_truth(const SynthConfig& cfg);
FeatureTable synth_dataset(const SynthConfig& cfg);

struct SplitRatio {
  std::size_t seen = 0;
  std::size_t unseen = 0;

  /// "60/10" form.
  static SplitRatio parse(const std::string& text);
  std::string str() const;
  friend bool operator==(const SplitRatio&, const SplitRatio&) = default;
};

enum class Mode { kZsl, kGzsl };
const char* mode_name(Mode mode);
Mode parse_mode(const std::string& text);

/// Default share of each seen class used for training under GZSL (600 of 800).
inline constexpr double kGzslTrainFraction = 0.75;

struct SplitSpec {
  SplitRatio ratio;
  std::size_t split_index = 0;
  std::vector<int> seen;    // ascending
  std::vector<int> unseen;  // ascending
  double gzsl_train_fraction = kGzslTrainFraction;
  std::uint64_t partition_seed = 0;

  std::string to_json() const;
  static SplitSpec from_json(const std::string& text);
};

/// `num_splits` pairwise-distinct seen/unseen partitions, deterministic in `seed`.
std::vector<SplitSpec> make_splits(std::size_t num_classes, SplitRatio ratio,
                                   std::size_t num_splits, std::uint64_t seed,
                                   double gzsl_train_fraction = kGzslTrainFraction);

/// Instance rows used for VAE training and for testing under one split.
/// ZSL trains on every seen-class row; GZSL holds out a per-class test share.
struct InstancePartition {
  std::vector<std::vector<std::size_t>> train_by_class;  // indexed by class id
  std::vector<std::size_t> seen_train;
  std::vector<std::size_t> seen_test;
  std::vector<std::size_t> unseen_test;
};

InstancePartition partition_instances(const FeatureTable& table, const SplitSpec& split, Mode mode);

/// c classes x k instances. Descriptor row j describes class `classes[j]`.
struct Batch {
  Tensor2D visual;
  std::vector<int> labels;
  Tensor2D descriptors;
  std::vector<int> classes;
};

/// Picks c distinct seen classes uniformly among those with at least k training
/// rows, then k rows per class without replacement. With `require_pairs`
/// (visual-to-visual loss enabled) k = 1 is rejected.
Batch sample_batch(const FeatureTable& table, const InstancePartition& partition, std::size_t c,
                   std::size_t k, Rng& rng, bool require_pairs = true);

}  // namespace crossalign
