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

#include "crossalign/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossalign/error.hpp"
#include "crossalign/numerics.hpp"

namespace crossalign {

void AdamSettings::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("optimizer eps must be positive");
}

AdamState AdamState::zeros_like(std::span<Tensor2D* const> params) {
  AdamState s;
  for (const Tensor2D* p : params) {
    s.m.emplace_back(p->rows(), p->cols());
    s.v.emplace_back(p->rows(), p->cols());
  }
  return s;
}

void adam_step(std::span<Tensor2D* const> params, std::span<const Tensor2D> grads,
               AdamState& state, const AdamSettings& settings) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ContractError("adam_step: params, grads and state disagree in length");
  }
  for (std::size_t p = 0; p < grads.size(); ++p) {
    if (!grads[p].all_finite()) {
      throw DivergenceError("non-finite gradient for parameter " + std::to_string(p) +
                            " at optimizer step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(settings.beta1, t);
  const double correction2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    require_same_shape(*params[p], grads[p], "adam_step");
    auto w = params[p]->values();
    auto g = grads[p].values();
    auto m = state.m[p].values();
    auto v = state.v[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = settings.beta1 * m[i] + (1.0 - settings.beta1) * g[i];
      v[i] = settings.beta2 * v[i] + (1.0 - settings.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= settings.learning_rate * m_hat / (std::sqrt(v_hat) + settings.eps);
    }
  }
}

void HyperParams::validate() const {
  weights.validate();
  optimizer.validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c < 1 || k < 1) throw ConfigError("batch shape c and k must be >= 1");
  if (latent < 1 || visual_hidden < 1 || semantic_hidden < 1) {
    throw ConfigError("latent size and hidden widths must be >= 1");
  }
  const bool contrastive = weights.vtov > 0.0 || weights.vtos > 0.0 || weights.stov > 0.0;
  if (contrastive && c < 2) throw ConfigError("contrastive losses need c >= 2 classes per batch");
  if (weights.vtov > 0.0 && k < 2) {
    throw ConfigError("the visual-to-visual loss needs k >= 2 instances per class");
  }
  if (n_gen < 1) throw ConfigError("n_gen must be >= 1");
  if (classifier.epochs < 1) throw ConfigError("classifier epochs must be >= 1");
  if (!(classifier.learning_rate > 0.0)) throw ConfigError("classifier learning_rate must be > 0");
}

LossOptions HyperParams::loss_options() const {
  return LossOptions{weights, sum_reduction ? Reduction::kSum : Reduction::kMean,
                     contrastive_on_mu};
}

VaeDims HyperParams::dims_for(std::size_t visual_dim, std::size_t semantic_dim) const {
  return VaeDims{visual_dim, semantic_dim, visual_hidden, semantic_hidden, latent};
}

HyperParams preset_zsl() {
  HyperParams hp;
  hp.weights = LossWeights{10.0, 1.0, 100.0, 100.0, 10.0, 2.0};
  hp.c = 5;
  hp.k = 5;
  hp.latent = 64;
  hp.epochs = 50;
  return hp;
}

HyperParams preset_gzsl() {
  HyperParams hp;
  hp.weights = LossWeights{1.0, 1.0, 0.1, 1.0, 1.0, 2.0};
  hp.c = 5;
  hp.k = 10;
  hp.latent = 64;
  hp.epochs = 50;
  return hp;
}

HyperParams preset(Mode mode) { return mode == Mode::kZsl ? preset_zsl() : preset_gzsl(); }

NoiseDraw NoiseDraw::sample(std::size_t n, std::size_t m, std::size_t latent, Rng& rng) {
  NoiseDraw d;
  d.visual = standard_normal(n, latent, rng);
  d.semantic = standard_normal(m, latent, rng);
  return d;
}

BatchLatents forward_batch(Tape& tape, const VaeVars& vars, const Batch& batch,
                           const NoiseDraw& noise) {
  BatchLatents b;
  b.labels = batch.labels;
  b.class_of = batch.classes;
  b.visual = tape.constant(batch.visual);
  b.semantic = tape.constant(batch.descriptors);
  LatentVars qv = encode(vars.visual_encoder, b.visual, vars.latent);
  LatentVars qs = encode(vars.semantic_encoder, b.semantic, vars.latent);
  b.mu_v = qv.mu;
  b.log_var_v = qv.log_var;
  b.mu_s = qs.mu;
  b.log_var_s = qs.log_var;
  b.zv = ad::reparameterize(qv.mu, qv.log_var, noise.visual);
  b.zs = ad::reparameterize(qs.mu, qs.log_var, noise.semantic);
  b.visual_recon = decode(vars.visual_decoder, b.zv);
  b.semantic_recon = decode(vars.semantic_decoder, b.zs);
  b.visual_cross = decode(vars.visual_decoder, ad::gather_rows(b.zs, b.descriptor_rows()));
  b.semantic_cross = decode(vars.semantic_decoder, b.zv);
  return b;
}

std::size_t steps_per_epoch(std::size_t train_instances, std::size_t c, std::size_t k) {
  const std::size_t per_batch = c * k;
  return std::max<std::size_t>(1, (train_instances + per_batch - 1) / per_batch);
}

namespace {

std::string describe(const LossBreakdown& b) {
  std::ostringstream os;
  os << "vae=" << b.vae;
  auto opt = [&os](const char* name, const std::optional<double>& v) {
    if (v) os << ' ' << name << '=' << *v;
  };
  opt("cmfr", b.cmfr);
  opt("cmda", b.cmda);
  opt("vtov", b.vtov);
  opt("vtos", b.vtos);
  opt("stov", b.stov);
  os << " total=" << b.total;
  return os.str();
}

/// Running per-term sums for the epoch summary.
struct Accumulator {
  LossBreakdown sum;
  std::size_t count = 0;

  void add(const LossBreakdown& b) {
    auto acc = [](std::optional<double>& into, const std::optional<double>& v) {
      if (v) into = into.value_or(0.0) + *v;
    };
    sum.vae += b.vae;
    acc(sum.cmfr, b.cmfr);
    acc(sum.cmda, b.cmda);
    acc(sum.vtov, b.vtov);
    acc(sum.vtos, b.vtos);
    acc(sum.stov, b.stov);
    sum.total += b.total;
    ++count;
  }

  LossBreakdown mean() const {
    const double n = static_cast<double>(count);
    LossBreakdown m;
    auto div = [n](const std::optional<double>& v) -> std::optional<double> {
      if (!v) return std::nullopt;
      return *v / n;
    };
    m.vae = sum.vae / n;
    m.cmfr = div(sum.cmfr);
    m.cmda = div(sum.cmda);
    m.vtov = div(sum.vtov);
    m.vtos = div(sum.vtos);
    m.stov = div(sum.stov);
    m.total = sum.total / n;
    return m;
  }
};

}  // namespace

TrainResult train(const FeatureTable& table, const InstancePartition& partition,
                  const HyperParams& hp, const Rng& rng,
                  const std::function<void(const StepRecord&)>& on_step,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  hp.validate();
  Rng init_rng = rng.split(StreamLabel::kInit);
  Rng sampler_rng = rng.split(StreamLabel::kSampler);
  Rng reparam_rng = rng.split(StreamLabel::kReparam);

  TrainResult result;
  result.model = init_params(init_rng, hp.dims_for(table.visual_dim(), table.semantic_dim()));
  auto params = result.model.parameters();
  AdamState state = AdamState::zeros_like(params);

  const std::size_t steps = steps_per_epoch(partition.seen_train.size(), hp.c, hp.k);
  const bool require_pairs = hp.weights.vtov > 0.0;
  std::size_t global_step = 0;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    LossOptions options = hp.loss_options();
    if (hp.warmup_epochs > 0) {
      const double ramp = std::min(1.0, static_cast<double>(epoch + 1) /
                                            static_cast<double>(hp.warmup_epochs));
      for (double* w : {&options.weights.cmfr, &options.weights.cmda, &options.weights.vtov,
                        &options.weights.vtos, &options.weights.stov}) {
        *w *= ramp;
      }
    }
    Accumulator acc;
    for (std::size_t s = 0; s < steps; ++s, ++global_step) {
      const Batch batch = sample_batch(table, partition, hp.c, hp.k, sampler_rng, require_pairs);
      const NoiseDraw noise =
          NoiseDraw::sample(batch.labels.size(), batch.classes.size(), hp.latent, reparam_rng);
      Tape tape;
      const VaeVars vars = bind_parameters(tape, result.model);
      const BatchLatents latents = forward_batch(tape, vars, batch, noise);
      const TotalLoss loss = total_loss(latents, options);
      if (!std::isfinite(loss.breakdown.total)) {
        throw DivergenceError("non-finite total loss at step " + std::to_string(global_step) +
                              " (epoch " + std::to_string(epoch) + "): " +
                              describe(loss.breakdown));
      }
      const Gradients grads = tape.backward(loss.total);
      std::vector<Tensor2D> g;
      for (const Var& v : vars.all()) g.push_back(grads.of(v));
      try {
        adam_step(params, g, state, hp.optimizer);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                              "): " + describe(loss.breakdown));
      }
      acc.add(loss.breakdown);
      if (on_step) on_step(StepRecord{global_step, epoch, loss.breakdown});
    }
    EpochRecord record{epoch, steps, acc.mean()};
    if (on_epoch) on_epoch(record);
    result.history.push_back(record);
  }
  return result;
}

}  // namespace crossalign
