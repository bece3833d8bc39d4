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

#include <functional>
#include <span>

#include "crossalign/rng.hpp"
#include "crossalign/tape.hpp"
#include "crossalign/tensor.hpp"

namespace crossalign {

/// Bounds applied to encoder log-variances before exponentiation.
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// N(0, 1) matrix drawn row-major from `rng`.
Tensor2D standard_normal(std::size_t rows, std::size_t cols, Rng& rng);

/// z = mu + exp(clamp(log_var) / 2) * eps with eps ~ N(0, I) from `rng`.
Tensor2D gaussian_reparam_sample(const Tensor2D& mu, const Tensor2D& log_var, Rng& rng);

/// Tape variant; eps is drawn from `rng` and held constant for the backward pass.
Var gaussian_reparam_sample(const Var& mu, const Var& log_var, Rng& rng);

/// Compares `analytic[i]` against central differences of `f` over every
/// coordinate of `*params[i]`. Each coordinate is perturbed in place and
/// restored. Relative error is |fd - analytic| / max(1, |analytic|); returns
/// the maximum over all coordinates.
double finite_diff_check(const std::function<double()>& f, std::span<Tensor2D* const> params,
                         std::span<const Tensor2D> analytic, double eps);

}  // namespace crossalign
