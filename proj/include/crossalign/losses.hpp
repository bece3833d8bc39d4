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
#include <optional>
#include <string>
#include <vector>

#include "crossalign/tape.hpp"

namespace crossalign {

/// How per-anchor terms are combined: kMean divides each loss by its anchor
/// count (N visual rows or M descriptors); kSum keeps the raw sums.
enum class Reduction { kMean, kSum };

/// Weights of the five auxiliary terms; the VAE term always has weight 1.
struct LossWeights {
  double cmfr = 0.0;  // lambda1
  double cmda = 0.0;  // lambda2
  double vtov = 0.0;  // lambda3
  double vtos = 0.0;  // lambda4
  double stov = 0.0;  // lambda5
  double tau = 1.0;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossOptions {
  LossWeights weights;
  Reduction reduction = Reduction::kMean;
  /// Contrastive terms use posterior means instead of reparameterized samples.
  bool contrastive_on_mu = false;
};

/// Every quantity the losses read, recorded on one tape.
///
/// Visual rows are indexed by I = {0..N-1}, descriptor rows by J = {0..M-1}.
/// `class_of[j]` is the class of descriptor row j and `labels[i]` the class of
/// visual row i; each label must have exactly one descriptor row.
struct BatchLatents {
  Var visual;          // v, N x Dv
  Var semantic;        // s, M x Ds
  Var mu_v, log_var_v; // N x latent
  Var mu_s, log_var_s; // M x latent
  Var zv;              // N x latent, sampled
  Var zs;              // M x latent, sampled
  Var visual_recon;    // D_v(zv), N x Dv
  Var semantic_recon;  // D_s(zs), M x Ds
  Var visual_cross;    // D_v(zs[s(i)]), N x Dv
  Var semantic_cross;  // D_s(zv), N x Ds
  std::vector<int> labels;
  std::vector<int> class_of;

  /// s(i) for every visual row. Throws IntegrityError for a label without a
  /// descriptor or a class with two descriptor rows.
  std::vector<std::size_t> descriptor_rows() const;
};

/// Negated evidence lower bound: L1 reconstruction of both modalities plus the
/// closed-form KL of both posteriors against N(0, I).
Var vae_loss(const BatchLatents& b, Reduction reduction = Reduction::kMean);
/// Cross-modal L1 reconstruction, each visual row paired with its class descriptor.
Var cmfr_loss(const BatchLatents& b, Reduction reduction = Reduction::kMean);
/// Per-instance Euclidean distance between the two posteriors (means and standard deviations).
Var cmda_loss(const BatchLatents& b, Reduction reduction = Reduction::kMean);

/// Visual-to-visual supervised contrastive loss. The softmax denominator runs
/// over every other visual row (positives included). Throws PreconditionError
/// naming the class when a class has a single row.
Var vtov_loss(const BatchLatents& b, double tau, Reduction reduction = Reduction::kMean,
              bool on_mu = false);
/// Visual-to-semantic contrastive loss over all M descriptor rows.
Var vtos_loss(const BatchLatents& b, double tau, Reduction reduction = Reduction::kMean,
              bool on_mu = false);
/// Semantic-to-visual contrastive loss; each descriptor is an anchor against all visual rows.
Var stov_loss(const BatchLatents& b, double tau, Reduction reduction = Reduction::kMean,
              bool on_mu = false);

/// Unweighted values of every evaluated term. Terms with zero weight are skipped.
struct LossBreakdown {
  double vae = 0.0;
  std::optional<double> cmfr, cmda, vtov, vtos, stov;
  double total = 0.0;
};

struct TotalLoss {
  Var total;
  LossBreakdown breakdown;
};

/// vae + l1 cmfr + l2 cmda + l3 vtov + l4 vtos + l5 stov. A zero weight skips the
/// term and its preconditions.
TotalLoss total_loss(const BatchLatents& b, const LossOptions& options);

}  // namespace crossalign
