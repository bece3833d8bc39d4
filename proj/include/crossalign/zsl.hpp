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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crossalign/data.hpp"
#include "crossalign/model.hpp"
#include "crossalign/train.hpp"

namespace crossalign {

enum class Provenance { kSemanticGenerated, kVisualEncoded };

/// Latent rows for fitting the final classifier.
struct LatentDataset {
  Tensor2D rows;
  std::vector<int> labels;
  std::vector<Provenance> provenance;
};

/// ZSL: n_gen samples from the semantic posterior of every unseen class.
/// GZSL: additionally one sample from the visual posterior of every seen-class
/// training row.
LatentDataset generate_latent_training_set(const VaePair& model, const FeatureTable& table,
                                           const SplitSpec& split,
                                           const InstancePartition& partition, Mode mode,
                                           std::size_t n_gen, Rng& rng);

/// Multinomial logistic regression over latent codes.
struct SoftmaxClassifier {
  Tensor2D weights;          // latent x C'
  Tensor2D bias;             // 1 x C'
  std::vector<int> classes;  // ascending class id of each output column
  std::vector<double> loss_history;  // mean cross-entropy after each epoch

  Tensor2D logits(const Tensor2D& latent) const;
  /// Argmax class ids; ties resolve to the smaller class id.
  std::vector<int> predict(const Tensor2D& latent) const;
};

/// Full-batch adaptive-moment training from zero weights. `classes` lists the
/// output classes (at least two, each with at least one row).
SoftmaxClassifier train_classifier(const LatentDataset& ds, const std::vector<int>& classes,
                                   const ClassifierSettings& settings);

/// Encodes `visual` and classifies the posterior means (or one posterior sample
/// per row when `sample_rng` is given).
std::vector<int> classify(const VaePair& model, const SoftmaxClassifier& clf,
                          const Tensor2D& visual, Rng* sample_rng = nullptr);

struct Metrics {
  Mode mode = Mode::kZsl;
  double zsl_accuracy = 0.0;   // micro, ZSL only
  double zsl_macro = 0.0;      // mean per-class accuracy, ZSL only
  double seen_accuracy = 0.0;  // S, GZSL only
  double unseen_accuracy = 0.0;  // U, GZSL only
  double harmonic = 0.0;         // H, GZSL only
  std::map<int, double> per_class;

  /// Headline number: ZSL accuracy or GZSL harmonic mean.
  double headline() const { return mode == Mode::kZsl ? zsl_accuracy : harmonic; }
};

/// 2SU / (S + U), and 0 when S + U = 0.
double harmonic_mean(double seen, double unseen);

Metrics evaluate(const VaePair& model, const SoftmaxClassifier& clf, const FeatureTable& table,
                 const InstancePartition& partition, Mode mode, Rng* sample_rng = nullptr);

/// Generates the latent set, fits the classifier and evaluates. Randomness comes
/// from the classifier stream of `rng`.
Metrics evaluate_model(const VaePair& model, const FeatureTable& table, const SplitSpec& split,
                       Mode mode, const HyperParams& hp, const Rng& rng);

struct SplitResult {
  SplitSpec split;
  Metrics metrics;
  std::vector<EpochRecord> history;
};

struct ExperimentReport {
  Mode mode = Mode::kZsl;
  SplitRatio ratio;
  std::uint64_t master_seed = 0;
  std::vector<SplitResult> per_split;
  Metrics mean;
  Metrics stddev;  // population standard deviation of each headline field
};

struct ExperimentHooks {
  std::function<void(std::size_t split, const StepRecord&)> on_step;
  std::function<void(std::size_t split, const EpochRecord&)> on_epoch;
  std::function<void(std::size_t split, const SplitSpec&, const VaePair&)> on_model;
};

/// Fills `mean` and `stddev` from `per_split` (population std).
void summarize_report(ExperimentReport& report);

/// Per-run random stream of split `index` under `master_seed`.
Rng split_run_rng(std::uint64_t master_seed, std::size_t index);
std::vector<SplitSpec> experiment_splits(std::size_t num_classes, SplitRatio ratio,
                                         std::size_t num_splits, std::uint64_t master_seed);

/// Trains and evaluates on each split; returns per-split metrics, mean and std.
ExperimentReport run_experiment(const FeatureTable& table, SplitRatio ratio,
                                std::size_t num_splits, const HyperParams& hp, Mode mode,
                                std::uint64_t master_seed, const ExperimentHooks& hooks = {});

/// Which contrastive terms a variant keeps (vtov, vtos, stov).
struct AblationVariant {
  std::string name;
  bool vtov = false;
  bool vtos = false;
  bool stov = false;
};

/// v0 (none), v1 (vtov), v2 (vtos), v3 (stov), v4 (vtov + vtos), v5 (all).
const std::array<AblationVariant, 6>& ablation_variants();
/// `base` with lambda3..lambda5 zeroed where the variant drops the term.
HyperParams ablation_config(const HyperParams& base, const AblationVariant& variant);

struct AblationRow {
  AblationVariant variant;
  double zsl = 0.0;   // mean ZSL accuracy
  double gzsl = 0.0;  // mean harmonic mean
  ExperimentReport zsl_report;
  ExperimentReport gzsl_report;
};

struct AblationOptions {
  std::size_t num_splits = 5;
  std::uint64_t master_seed = 0;
  bool run_zsl = true;
  bool run_gzsl = true;
};

std::vector<AblationRow> run_ablation(const FeatureTable& table, SplitRatio ratio,
                                      const HyperParams& zsl_base, const HyperParams& gzsl_base,
                                      const AblationOptions& options);

/// `variant,vtov,vtos,stov,zsl,gzsl` with six data rows.
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace crossalign
