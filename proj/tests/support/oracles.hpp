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

// Brute-force scalar references. Nothing here calls library kernels: every
// quantity is recomputed with plain loops over nested vectors.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "crossalign/losses.hpp"
#include "crossalign/model.hpp"
#include "crossalign/numerics.hpp"
#include "crossalign/rng.hpp"
#include "crossalign/tape.hpp"
#include "crossalign/train.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const crossalign::Tensor2D& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  }
  return m;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) acc += a[i][k] * b[k][j];
      out[i][j] = acc;
    }
  }
  return out;
}

inline std::vector<double> unit(const std::vector<double>& x) {
  double n = 0.0;
  for (double v : x) n += v * v;
  n = std::sqrt(n);
  std::vector<double> out(x);
  for (double& v : out) v /= n;
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Sum over anchors and positives of -log(exp(s_ip) / sum_{a != i} exp(s_ia)) / |P(i)|.
inline double vtov(const Matrix& zv, const std::vector<int>& labels, double tau) {
  const std::size_t n = zv.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto zi = unit(zv[i]);
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a != i) denom += std::exp(dot(zi, unit(zv[a])) / tau);
    }
    double inner = 0.0;
    int positives = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      inner += std::log(std::exp(dot(zi, unit(zv[p])) / tau) / denom);
      ++positives;
    }
    loss -= inner / positives;
  }
  return loss;
}

/// `desc[i]` is the descriptor row of instance i.
inline double vtos(const Matrix& zv, const Matrix& zs, const std::vector<std::size_t>& desc,
                   double tau) {
  double loss = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const auto zi = unit(zv[i]);
    double denom = 0.0;
    for (const auto& s : zs) denom += std::exp(dot(zi, unit(s)) / tau);
    loss -= std::log(std::exp(dot(zi, unit(zs[desc[i]])) / tau) / denom);
  }
  return loss;
}

inline double stov(const Matrix& zv, const Matrix& zs, const std::vector<std::size_t>& desc,
                   double tau) {
  double loss = 0.0;
  for (std::size_t j = 0; j < zs.size(); ++j) {
    const auto sj = unit(zs[j]);
    double denom = 0.0;
    for (const auto& v : zv) denom += std::exp(dot(sj, unit(v)) / tau);
    double inner = 0.0;
    int positives = 0;
    for (std::size_t p = 0; p < zv.size(); ++p) {
      if (desc[p] != j) continue;
      inner += std::log(std::exp(dot(sj, unit(zv[p])) / tau) / denom);
      ++positives;
    }
    loss -= inner / positives;
  }
  return loss;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

/// KL(N(mu, e^lv) || N(0, 1)) summed over coordinates, from the textbook formula.
inline double kl_closed(const std::vector<double>& mu, const std::vector<double>& lv) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double var = std::exp(lv[i]);
    s += 0.5 * (mu[i] * mu[i] + var - 1.0 - std::log(var));
  }
  return s;
}

/// KL of a 1-d Gaussian against N(0, 1) by composite Simpson integration of
/// p(x) log(p(x) / q(x)) over mu +- 12 sigma.
inline double kl_numeric_1d(double mu, double log_var, std::size_t intervals = 20000) {
  const double sigma = std::exp(0.5 * log_var);
  const double lo = mu - 12.0 * sigma, hi = mu + 12.0 * sigma;
  const double h = (hi - lo) / static_cast<double>(intervals);
  const double pi = std::acos(-1.0);
  auto integrand = [&](double x) {
    const double log_p = -0.5 * std::log(2 * pi) - std::log(sigma) -
                         (x - mu) * (x - mu) / (2 * sigma * sigma);
    const double log_q = -0.5 * std::log(2 * pi) - 0.5 * x * x;
    return std::exp(log_p) * (log_p - log_q);
  };
  double s = integrand(lo) + integrand(hi);
  for (std::size_t i = 1; i < intervals; ++i) {
    s += integrand(lo + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

}  // namespace oracle

namespace fixture {

/// Latents held as tape constants, so every loss can be evaluated directly.
struct Latents {
  std::unique_ptr<crossalign::Tape> tape = std::make_unique<crossalign::Tape>();
  crossalign::BatchLatents b;
  // raw copies for the oracles
  crossalign::Tensor2D v, s, mu_v, lv_v, mu_s, lv_s, zv, zs, v_rec, s_rec, v_cross, s_cross;
};

inline crossalign::Tensor2D random_tensor(crossalign::Rng& rng, std::size_t r, std::size_t c,
                                          double scale = 1.0) {
  crossalign::Tensor2D t(r, c);
  for (double& x : t.values()) x = scale * rng.normal();
  return t;
}

/// c classes with k instances each, labels are 10, 11, ... so they differ from row indices.
inline Latents random_latents(crossalign::Rng& rng, std::size_t c, std::size_t k,
                              std::size_t latent, std::size_t dv, std::size_t ds) {
  Latents f;
  const std::size_t n = c * k;
  f.v = random_tensor(rng, n, dv);
  f.s = random_tensor(rng, c, ds);
  f.mu_v = random_tensor(rng, n, latent);
  f.lv_v = random_tensor(rng, n, latent, 0.5);
  f.mu_s = random_tensor(rng, c, latent);
  f.lv_s = random_tensor(rng, c, latent, 0.5);
  f.zv = random_tensor(rng, n, latent);
  f.zs = random_tensor(rng, c, latent);
  f.v_rec = random_tensor(rng, n, dv);
  f.s_rec = random_tensor(rng, c, ds);
  f.v_cross = random_tensor(rng, n, dv);
  f.s_cross = random_tensor(rng, n, ds);
  auto& t = *f.tape;
  auto& b = f.b;
  b.visual = t.constant(f.v);
  b.semantic = t.constant(f.s);
  b.mu_v = t.constant(f.mu_v);
  b.log_var_v = t.constant(f.lv_v);
  b.mu_s = t.constant(f.mu_s);
  b.log_var_s = t.constant(f.lv_s);
  b.zv = t.constant(f.zv);
  b.zs = t.constant(f.zs);
  b.visual_recon = t.constant(f.v_rec);
  b.semantic_recon = t.constant(f.s_rec);
  b.visual_cross = t.constant(f.v_cross);
  b.semantic_cross = t.constant(f.s_cross);
  for (std::size_t j = 0; j < c; ++j) b.class_of.push_back(static_cast<int>(10 + j));
  // interleave classes so instance order differs from class order
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(10 + i % c));
  return f;
}

/// Only the latent codes, for the contrastive terms.
inline Latents contrastive_latents(const crossalign::Tensor2D& zv, const crossalign::Tensor2D& zs,
                                   std::vector<int> labels, std::vector<int> class_of) {
  Latents f;
  f.zv = zv;
  f.zs = zs;
  f.b.zv = f.b.mu_v = f.tape->constant(zv);
  f.b.zs = f.b.mu_s = f.tape->constant(zs);
  f.b.labels = std::move(labels);
  f.b.class_of = std::move(class_of);
  return f;
}

/// The same batch with instance rows reordered by `perm` and descriptor rows by `dperm`.
inline crossalign::BatchLatents permuted(const Latents& f, const std::vector<std::size_t>& perm,
                                         const std::vector<std::size_t>& dperm) {
  crossalign::Tape& t = *f.tape;
  crossalign::BatchLatents p = f.b;
  auto rows_of = [&](const crossalign::Tensor2D& x, const std::vector<std::size_t>& order) {
    return t.constant(crossalign::kernels::gather_rows(x, order));
  };
  p.visual = rows_of(f.v, perm);
  p.mu_v = rows_of(f.mu_v, perm);
  p.log_var_v = rows_of(f.lv_v, perm);
  p.zv = rows_of(f.zv, perm);
  p.visual_recon = rows_of(f.v_rec, perm);
  p.visual_cross = rows_of(f.v_cross, perm);
  p.semantic_cross = rows_of(f.s_cross, perm);
  p.semantic = rows_of(f.s, dperm);
  p.mu_s = rows_of(f.mu_s, dperm);
  p.log_var_s = rows_of(f.lv_s, dperm);
  p.zs = rows_of(f.zs, dperm);
  p.semantic_recon = rows_of(f.s_rec, dperm);
  for (std::size_t i = 0; i < perm.size(); ++i) p.labels[i] = f.b.labels[perm[i]];
  for (std::size_t j = 0; j < dperm.size(); ++j) p.class_of[j] = f.b.class_of[dperm[j]];
  return p;
}

/// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
inline crossalign::Tensor2D random_orthogonal(crossalign::Rng& rng, std::size_t d) {
  crossalign::Tensor2D q = random_tensor(rng, d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double proj = 0;
      for (std::size_t k = 0; k < d; ++k) proj += q(i, k) * q(j, k);
      for (std::size_t k = 0; k < d; ++k) q(i, k) -= proj * q(j, k);
    }
    double n = 0;
    for (std::size_t k = 0; k < d; ++k) n += q(i, k) * q(i, k);
    for (std::size_t k = 0; k < d; ++k) q(i, k) /= std::sqrt(n);
  }
  return q;
}

/// A small model plus one fixed batch and noise draw; the loss is re-evaluated
/// on a fresh tape for every call so finite differences see in-place edits.
struct GradientCase {
  crossalign::VaePair model;
  crossalign::Batch batch;
  crossalign::NoiseDraw noise;
};

inline GradientCase make_gradient_case(crossalign::Rng& rng, std::size_t c, std::size_t k,
                                       std::size_t latent, std::size_t dv, std::size_t ds,
                                       std::size_t hidden) {
  GradientCase g;
  g.model = crossalign::init_params(rng, crossalign::VaeDims{dv, ds, hidden, hidden, latent});
  // nonzero biases so no hidden unit sits exactly at the relu kink
  for (crossalign::Tensor2D* p : g.model.parameters()) {
    if (p->rows() == 1) {
      for (double& x : p->values()) x = 0.1 * rng.normal();
    }
  }
  const std::size_t n = c * k;
  g.batch.visual = random_tensor(rng, n, dv);
  g.batch.descriptors = random_tensor(rng, c, ds);
  for (std::size_t j = 0; j < c; ++j) g.batch.classes.push_back(static_cast<int>(j));
  for (std::size_t i = 0; i < n; ++i) g.batch.labels.push_back(static_cast<int>(i / k));
  g.noise = crossalign::NoiseDraw::sample(n, c, latent, rng);
  return g;
}

using LossFn = std::function<crossalign::Var(const crossalign::BatchLatents&)>;

/// Loss value and analytic gradients for every model parameter.
inline double loss_and_grads(const GradientCase& g, const LossFn& loss,
                             std::vector<crossalign::Tensor2D>* grads) {
  crossalign::Tape tape;
  const crossalign::VaeVars vars = crossalign::bind_parameters(tape, g.model);
  const crossalign::BatchLatents b = crossalign::forward_batch(tape, vars, g.batch, g.noise);
  const crossalign::Var value = loss(b);
  if (grads != nullptr) {
    const crossalign::Gradients all = tape.backward(value);
    grads->clear();
    for (const crossalign::Var& v : vars.all()) grads->push_back(all.of(v));
  }
  return value.scalar();
}

/// Max relative error between analytic and central-difference gradients.
inline double gradient_error(GradientCase& g, const LossFn& loss, double eps) {
  std::vector<crossalign::Tensor2D> analytic;
  loss_and_grads(g, loss, &analytic);
  const auto params = g.model.parameters();
  return crossalign::finite_diff_check([&] { return loss_and_grads(g, loss, nullptr); }, params,
                                       analytic, eps);
}

}  // namespace fixture
