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

#include "crossalign/rng.hpp"
#include "crossalign/tape.hpp"
#include "crossalign/tensor.hpp"

namespace crossalign {

/// Layer widths of the two modality VAEs. Every encoder and decoder is a
/// single-hidden-layer MLP; encoders emit 2 * latent columns (mean, log-variance).
struct VaeDims {
  std::size_t visual_dim = 512;
  std::size_t semantic_dim = 1024;
  std::size_t visual_hidden = 512;
  std::size_t semantic_hidden = 256;
  std::size_t latent = 64;

  void validate() const;
  friend bool operator==(const VaeDims&, const VaeDims&) = default;
};

/// in -> hidden (relu) -> out.
struct Mlp {
  Tensor2D w1, b1, w2, b2;
  friend bool operator==(const Mlp&, const Mlp&) = default;
};

struct VaePair {
  VaeDims dims;
  Mlp visual_encoder;
  Mlp visual_decoder;
  Mlp semantic_encoder;
  Mlp semantic_decoder;

  /// Fixed order: visual encoder, visual decoder, semantic encoder, semantic decoder;
  /// each as w1, b1, w2, b2.
  std::vector<Tensor2D*> parameters();
  std::vector<const Tensor2D*> parameters() const;
  static std::vector<std::string> parameter_names();
  std::size_t parameter_count() const;

  friend bool operator==(const VaePair&, const VaePair&) = default;
};

/// Diagonal Gaussian posterior; standard deviation is exp(log_var / 2).
struct LatentGaussian {
  Tensor2D mu;
  Tensor2D log_var;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
VaePair init_params(Rng& rng, const VaeDims& dims);

LatentGaussian encode_visual(const VaePair& pair, const Tensor2D& v);
LatentGaussian encode_semantic(const VaePair& pair, const Tensor2D& s);
Tensor2D decode_visual(const VaePair& pair, const Tensor2D& z);
Tensor2D decode_semantic(const VaePair& pair, const Tensor2D& z);

// Tape-bound views of the parameters, for training and gradient checks.

struct MlpVars {
  Var w1, b1, w2, b2;
};

struct VaeVars {
  MlpVars visual_encoder;
  MlpVars visual_decoder;
  MlpVars semantic_encoder;
  MlpVars semantic_decoder;
  std::size_t latent = 0;

  /// Same order as VaePair::parameters().
  std::vector<Var> all() const;
};

struct LatentVars {
  Var mu;
  Var log_var;
};

VaeVars bind_parameters(Tape& tape, const VaePair& pair);
/// Splits the encoder output into mean and clamped log-variance.
LatentVars encode(const MlpVars& encoder, const Var& x, std::size_t latent);
Var decode(const MlpVars& decoder, const Var& z);

}  // namespace crossalign
