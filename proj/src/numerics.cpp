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

#include "crossalign/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "crossalign/error.hpp"

namespace crossalign {

Tensor2D standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor2D out(rows, cols);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

Tensor2D gaussian_reparam_sample(const Tensor2D& mu, const Tensor2D& log_var, Rng& rng) {
  require_same_shape(mu, log_var, "gaussian_reparam_sample");
  Tensor2D z = mu;
  auto lv = log_var.values();
  auto zv = z.values();
  for (std::size_t i = 0; i < zv.size(); ++i) {
    zv[i] += std::exp(0.5 * std::clamp(lv[i], kLogVarMin, kLogVarMax)) * rng.normal();
  }
  return z;
}

Var gaussian_reparam_sample(const Var& mu, const Var& log_var, Rng& rng) {
  Tensor2D noise = standard_normal(mu.rows(), mu.cols(), rng);
  return ad::reparameterize(mu, ad::clamp(log_var, kLogVarMin, kLogVarMax), std::move(noise));
}

double finite_diff_check(const std::function<double()>& f, std::span<Tensor2D* const> params,
                         std::span<const Tensor2D> analytic, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ConfigError("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  }
  if (params.size() != analytic.size()) {
    throw ContractError("finite_diff_check: one analytic gradient per parameter required");
  }
  auto eval = [&f]() {
    const double v = f();
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite function value");
    return v;
  };
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor2D& param = *params[p];
    require_same_shape(param, analytic[p], "finite_diff_check");
    for (std::size_t i = 0; i < param.size(); ++i) {
      double& slot = param.values()[i];
      const double saved = slot;
      slot = saved + eps;
      const double up = eval();
      slot = saved - eps;
      const double down = eval();
      slot = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = analytic[p].values()[i];
      worst = std::max(worst, std::fabs(numeric - exact) / std::max(1.0, std::fabs(exact)));
    }
  }
  return worst;
}

}  // namespace crossalign
