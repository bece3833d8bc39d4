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

#include "crossalign/model.hpp"

#include <algorithm>
#include <cmath>

#include "crossalign/error.hpp"
#include "crossalign/numerics.hpp"

namespace crossalign {

void VaeDims::validate() const {
  auto check = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model dimension '") + name + "' must be >= 1");
  };
  check(visual_dim, "visual_dim");
  check(semantic_dim, "semantic_dim");
  check(visual_hidden, "visual_hidden");
  check(semantic_hidden, "semantic_hidden");
  check(latent, "latent");
}

std::vector<Tensor2D*> VaePair::parameters() {
  std::vector<Tensor2D*> out;
  for (Mlp* m : {&visual_encoder, &visual_decoder, &semantic_encoder, &semantic_decoder}) {
    out.insert(out.end(), {&m->w1, &m->b1, &m->w2, &m->b2});
  }
  return out;
}

std::vector<const Tensor2D*> VaePair::parameters() const {
  std::vector<const Tensor2D*> out;
  for (const Mlp* m : {&visual_encoder, &visual_decoder, &semantic_encoder, &semantic_decoder}) {
    out.insert(out.end(), {&m->w1, &m->b1, &m->w2, &m->b2});
  }
  return out;
}

std::vector<std::string> VaePair::parameter_names() {
  std::vector<std::string> out;
  for (const char* block :
       {"visual_encoder", "visual_decoder", "semantic_encoder", "semantic_decoder"}) {
    for (const char* leaf : {"w1", "b1", "w2", "b2"}) {
      out.push_back(std::string(block) + "." + leaf);
    }
  }
  return out;
}

std::size_t VaePair::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor2D* p : parameters()) n += p->size();
  return n;
}

namespace {

Tensor2D glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor2D w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  return w;
}

Mlp make_mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  Mlp m;
  m.w1 = glorot(in, hidden, rng);
  m.b1 = Tensor2D(1, hidden);
  m.w2 = glorot(hidden, out, rng);
  m.b2 = Tensor2D(1, out);
  return m;
}

Tensor2D run_mlp(const Mlp& m, const Tensor2D& x, const char* what) {
  if (x.cols() != m.w1.rows()) {
    throw DimensionError(std::string(what) + ": input width " + std::to_string(x.cols()) +
                         " does not match configured width " + std::to_string(m.w1.rows()) +
                         " (input " + x.shape_string() + ", weight " + m.w1.shape_string() + ")");
  }
  return kernels::affine(kernels::relu(kernels::affine(x, m.w1, m.b1)), m.w2, m.b2);
}

LatentGaussian split_posterior(const Tensor2D& out, std::size_t latent) {
  LatentGaussian g{kernels::slice_cols(out, 0, latent), kernels::slice_cols(out, latent, latent)};
  for (double& v : g.log_var.values()) v = std::clamp(v, kLogVarMin, kLogVarMax);
  return g;
}

}  // namespace

VaePair init_params(Rng& rng, const VaeDims& dims) {
  dims.validate();
  VaePair p;
  p.dims = dims;
  p.visual_encoder = make_mlp(dims.visual_dim, dims.visual_hidden, 2 * dims.latent, rng);
  p.visual_decoder = make_mlp(dims.latent, dims.visual_hidden, dims.visual_dim, rng);
  p.semantic_encoder = make_mlp(dims.semantic_dim, dims.semantic_hidden, 2 * dims.latent, rng);
  p.semantic_decoder = make_mlp(dims.latent, dims.semantic_hidden, dims.semantic_dim, rng);
  return p;
}

LatentGaussian encode_visual(const VaePair& pair, const Tensor2D& v) {
  return split_posterior(run_mlp(pair.visual_encoder, v, "encode_visual"), pair.dims.latent);
}

LatentGaussian encode_semantic(const VaePair& pair, const Tensor2D& s) {
  return split_posterior(run_mlp(pair.semantic_encoder, s, "encode_semantic"), pair.dims.latent);
}

Tensor2D decode_visual(const VaePair& pair, const Tensor2D& z) {
  return run_mlp(pair.visual_decoder, z, "decode_visual");
}

Tensor2D decode_semantic(const VaePair& pair, const Tensor2D& z) {
  return run_mlp(pair.semantic_decoder, z, "decode_semantic");
}

std::vector<Var> VaeVars::all() const {
  std::vector<Var> out;
  for (const MlpVars* m : {&visual_encoder, &visual_decoder, &semantic_encoder, &semantic_decoder}) {
    out.insert(out.end(), {m->w1, m->b1, m->w2, m->b2});
  }
  return out;
}

VaeVars bind_parameters(Tape& tape, const VaePair& pair) {
  auto bind = [&tape](const Mlp& m) {
    return MlpVars{tape.parameter(m.w1), tape.parameter(m.b1), tape.parameter(m.w2),
                   tape.parameter(m.b2)};
  };
  VaeVars vars;
  vars.visual_encoder = bind(pair.visual_encoder);
  vars.visual_decoder = bind(pair.visual_decoder);
  vars.semantic_encoder = bind(pair.semantic_encoder);
  vars.semantic_decoder = bind(pair.semantic_decoder);
  vars.latent = pair.dims.latent;
  return vars;
}

namespace {
Var run_mlp(const MlpVars& m, const Var& x) {
  if (x.cols() != m.w1.rows()) {
    throw DimensionError("mlp: input " + x.value().shape_string() +
                         " does not conform to weight " + m.w1.value().shape_string());
  }
  return ad::affine(ad::relu(ad::affine(x, m.w1, m.b1)), m.w2, m.b2);
}
}  // namespace

LatentVars encode(const MlpVars& encoder, const Var& x, std::size_t latent) {
  Var out = run_mlp(encoder, x);
  return LatentVars{ad::slice_cols(out, 0, latent),
                    ad::clamp(ad::slice_cols(out, latent, latent), kLogVarMin, kLogVarMax)};
}

Var decode(const MlpVars& decoder, const Var& z) { return run_mlp(decoder, z); }

}  // namespace crossalign
