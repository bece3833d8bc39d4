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
#include <functional>
#include <span>
#include <vector>

#include "crossalign/data.hpp"
#include "crossalign/losses.hpp"
#include "crossalign/model.hpp"
#include "crossalign/rng.hpp"

namespace crossalign {

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

struct AdamState {
  std::vector<Tensor2D> m;
  std::vector<Tensor2D> v;
  std::size_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState zeros_like(std::span<Tensor2D* const> params);
};

/// One bias-corrected adaptive-moment update, in place. Throws DivergenceError on a
/// non-finite gradient.
void adam_step(std::span<Tensor2D* const> params, std::span<const Tensor2D> grads,
               AdamState& state, const AdamSettings& settings);

/// Softmax classifier fitted on generated latent features.
struct ClassifierSettings {
  std::size_t epochs = 50;
  double learning_rate = 1e-2;
  friend bool operator==(const ClassifierSettings&, const ClassifierSettings&) = default;
};

struct HyperParams {
  LossWeights weights;
  std::size_t c = 5;
  std::size_t k = 5;
  std::size_t latent = 64;
  std::size_t visual_hidden = 512;
  std::size_t semantic_hidden = 256;
  std::size_t epochs = 50;
  AdamSettings optimizer;
  /// Linear ramp of lambda1..lambda5 over the first epochs; 0 disables it.
  std::size_t warmup_epochs = 0;
  bool contrastive_on_mu = false;
  bool sum_reduction = false;
  ClassifierSettings classifier;
  std::size_t n_gen = 200;
  bool eval_on_sample = false;

  void validate() const;
  LossOptions loss_options() const;
  VaeDims dims_for(std::size_t visual_dim, std::size_t semantic_dim) const;
};

/// Weights and batch shape of the ZSL and GZSL settings.
HyperParams preset_zsl();
HyperParams preset_gzsl();
HyperParams preset(Mode mode);

/// Reparameterization noise for one batch, held fixed across re-evaluations.
struct NoiseDraw {
  Tensor2D visual;
  Tensor2D semantic;
  static NoiseDraw sample(std::size_t n, std::size_t m, std::size_t latent, Rng& rng);
};

/// Encodes both modalities, samples latents, and decodes the self- and
/// cross-modal reconstructions on `tape`.
BatchLatents forward_batch(Tape& tape, const VaeVars& vars, const Batch& batch,
                           const NoiseDraw& noise);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  LossBreakdown losses;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  LossBreakdown mean;  // per-step average of each evaluated term
};

struct TrainResult {
  VaePair model;
  std::vector<EpochRecord> history;
};

std::size_t steps_per_epoch(std::size_t train_instances, std::size_t c, std::size_t k);

/// Minimizes the weighted total loss over the seen-class training rows.
/// Random streams (init, sampler, reparam) are split from `rng`.
TrainResult train(const FeatureTable& table, const InstancePartition& partition,
                  const HyperParams& hp, const Rng& rng,
                  const std::function<void(const StepRecord&)>& on_step = {},
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace crossalign
