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

#include "crossalign/losses.hpp"

#include <cmath>
#include <map>

#include "crossalign/error.hpp"

namespace crossalign {

void LossWeights::validate() const {
  const std::pair<double, const char*> lambdas[] = {
      {cmfr, "lambda1"}, {cmda, "lambda2"}, {vtov, "lambda3"}, {vtos, "lambda4"}, {stov, "lambda5"}};
  for (const auto& [value, name] : lambdas) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw ConfigError(std::string(name) + " must be a finite non-negative number");
    }
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive and finite");
}

std::vector<std::size_t> BatchLatents::descriptor_rows() const {
  std::map<int, std::size_t> row_of_class;
  for (std::size_t j = 0; j < class_of.size(); ++j) {
    if (!row_of_class.emplace(class_of[j], j).second) {
      throw IntegrityError("class " + std::to_string(class_of[j]) +
                           " has more than one descriptor row in the batch");
    }
  }
  std::vector<std::size_t> rows(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = row_of_class.find(labels[i]);
    if (it == row_of_class.end()) {
      throw IntegrityError("no descriptor for class " + std::to_string(labels[i]) +
                           " (visual row " + std::to_string(i) + ")");
    }
    rows[i] = it->second;
  }
  return rows;
}

namespace {

Var reduce(const Var& total, std::size_t anchors, Reduction reduction) {
  if (reduction == Reduction::kSum || anchors == 0) return total;
  return ad::scale(total, 1.0 / static_cast<double>(anchors));
}

Var l1_distance(const Var& a, const Var& b) { return ad::sum(ad::abs(ad::sub(a, b))); }

/// 0.5 * sum(mu^2 + exp(log_var) - 1 - log_var)
Var gaussian_kl(const Var& mu, const Var& log_var) {
  const double count = static_cast<double>(mu.value().size());
  Var quad = ad::add(ad::sum(ad::mul(mu, mu)), ad::sum(ad::exp(log_var)));
  Var inner = ad::add_scalar(ad::sub(quad, ad::sum(log_var)), -count);
  return ad::scale(inner, 0.5);
}

/// sum_i LSE_{a in mask(i)} S_ia - sum_ip W_ip S_ip, the shared form of the
/// three contrastive losses (each log-fraction is S_ip - LSE_i).
Var contrastive(const Var& similarity, Tensor2D denominator_mask, Tensor2D positive_weights) {
  Var lse = ad::masked_logsumexp_rows(similarity, std::move(denominator_mask));
  return ad::sub(ad::sum(lse), ad::weighted_sum(similarity, std::move(positive_weights)));
}

Var similarity(const Var& a, const Var& b, double tau) {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  return ad::scale(ad::matmul_bt(a, b), 1.0 / tau);
}

}  // namespace

Var vae_loss(const BatchLatents& b, Reduction reduction) {
  const std::size_t n = b.visual.rows(), m = b.semantic.rows();
  Var visual_part = ad::add(l1_distance(b.visual, b.visual_recon), gaussian_kl(b.mu_v, b.log_var_v));
  Var semantic_part =
      ad::add(l1_distance(b.semantic, b.semantic_recon), gaussian_kl(b.mu_s, b.log_var_s));
  return ad::add(reduce(visual_part, n, reduction), reduce(semantic_part, m, reduction));
}

Var cmfr_loss(const BatchLatents& b, Reduction reduction) {
  const auto rows = b.descriptor_rows();
  Var s_per_instance = ad::gather_rows(b.semantic, rows);
  Var total = ad::add(l1_distance(b.visual, b.visual_cross),
                      l1_distance(s_per_instance, b.semantic_cross));
  return reduce(total, rows.size(), reduction);
}

Var cmda_loss(const BatchLatents& b, Reduction reduction) {
  const auto rows = b.descriptor_rows();
  Var mu_s = ad::gather_rows(b.mu_s, rows);
  Var std_v = ad::exp(ad::scale(b.log_var_v, 0.5));
  Var std_s = ad::gather_rows(ad::exp(ad::scale(b.log_var_s, 0.5)), rows);
  Var dmu = ad::sub(b.mu_v, mu_s);
  Var dstd = ad::sub(std_v, std_s);
  Var per_row = ad::add(ad::row_sum(ad::mul(dmu, dmu)), ad::row_sum(ad::mul(dstd, dstd)));
  return reduce(ad::sum(ad::sqrt(per_row)), rows.size(), reduction);
}

Var vtov_loss(const BatchLatents& b, double tau, Reduction reduction, bool on_mu) {
  const std::size_t n = b.labels.size();
  std::map<int, std::size_t> class_size;
  for (int y : b.labels) ++class_size[y];
  for (const auto& [label, count] : class_size) {
    if (count < 2) {
      throw PreconditionError("vtov_loss: class " + std::to_string(label) +
                              " has a single instance in the batch; no positives for its anchor");
    }
  }
  Var z = ad::l2_normalize_rows(on_mu ? b.mu_v : b.zv);
  Var sim = similarity(z, z, tau);
  Tensor2D mask(n, n, 1.0);
  Tensor2D weights(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    mask(i, i) = 0.0;
    const double w = 1.0 / static_cast<double>(class_size[b.labels[i]] - 1);
    for (std::size_t p = 0; p < n; ++p) {
      if (p != i && b.labels[p] == b.labels[i]) weights(i, p) = w;
    }
  }
  return reduce(contrastive(sim, std::move(mask), std::move(weights)), n, reduction);
}

Var vtos_loss(const BatchLatents& b, double tau, Reduction reduction, bool on_mu) {
  const auto rows = b.descriptor_rows();
  const std::size_t n = rows.size(), m = b.class_of.size();
  Var zv = ad::l2_normalize_rows(on_mu ? b.mu_v : b.zv);
  Var zs = ad::l2_normalize_rows(on_mu ? b.mu_s : b.zs);
  Var sim = similarity(zv, zs, tau);
  Tensor2D weights(n, m);
  for (std::size_t i = 0; i < n; ++i) weights(i, rows[i]) = 1.0;
  return reduce(contrastive(sim, Tensor2D(n, m, 1.0), std::move(weights)), n, reduction);
}

Var stov_loss(const BatchLatents& b, double tau, Reduction reduction, bool on_mu) {
  const auto rows = b.descriptor_rows();
  const std::size_t n = rows.size(), m = b.class_of.size();
  std::vector<std::size_t> positives(m, 0);
  for (std::size_t r : rows) ++positives[r];
  for (std::size_t j = 0; j < m; ++j) {
    if (positives[j] == 0) {
      throw PreconditionError("stov_loss: descriptor of class " + std::to_string(b.class_of[j]) +
                              " has no same-class visual instance in the batch");
    }
  }
  Var zv = ad::l2_normalize_rows(on_mu ? b.mu_v : b.zv);
  Var zs = ad::l2_normalize_rows(on_mu ? b.mu_s : b.zs);
  Var sim = similarity(zs, zv, tau);
  Tensor2D weights(m, n);
  for (std::size_t i = 0; i < n; ++i) {
    weights(rows[i], i) = 1.0 / static_cast<double>(positives[rows[i]]);
  }
  return reduce(contrastive(sim, Tensor2D(m, n, 1.0), std::move(weights)), m, reduction);
}

TotalLoss total_loss(const BatchLatents& b, const LossOptions& options) {
  const LossWeights& w = options.weights;
  w.validate();
  TotalLoss out;
  Var total = vae_loss(b, options.reduction);
  out.breakdown.vae = total.scalar();
  auto add_term = [&](double weight, std::optional<double>& slot, auto&& compute) {
    if (weight == 0.0) return;
    Var term = compute();
    slot = term.scalar();
    total = ad::add(total, ad::scale(term, weight));
  };
  const Reduction r = options.reduction;
  const bool on_mu = options.contrastive_on_mu;
  add_term(w.cmfr, out.breakdown.cmfr, [&] { return cmfr_loss(b, r); });
  add_term(w.cmda, out.breakdown.cmda, [&] { return cmda_loss(b, r); });
  add_term(w.vtov, out.breakdown.vtov, [&] { return vtov_loss(b, w.tau, r, on_mu); });
  add_term(w.vtos, out.breakdown.vtos, [&] { return vtos_loss(b, w.tau, r, on_mu); });
  add_term(w.stov, out.breakdown.stov, [&] { return stov_loss(b, w.tau, r, on_mu); });
  out.total = total;
  out.breakdown.total = total.scalar();
  return out;
}

}  // namespace crossalign
