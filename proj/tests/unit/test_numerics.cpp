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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "crossalign/error.hpp"
#include "crossalign/numerics.hpp"

using namespace crossalign;

TEST(FiniteDiff, QuadraticIsExact) {
  Tensor2D p{{1.0, 2.0}};
  Tensor2D* params[] = {&p};
  const Tensor2D analytic[] = {Tensor2D{{2.0, 4.0}}};
  auto f = [&] { return p(0, 0) * p(0, 0) + p(0, 1) * p(0, 1); };
  EXPECT_LT(finite_diff_check(f, params, analytic, 1e-5), 1e-8);
  EXPECT_EQ(p, (Tensor2D{{1.0, 2.0}}));  // restored
}

TEST(FiniteDiff, ConstantFunction) {
  Tensor2D p{{3.0, -1.0, 0.5}};
  Tensor2D* params[] = {&p};
  const Tensor2D analytic[] = {Tensor2D(1, 3, 0.0)};
  EXPECT_LT(finite_diff_check([] { return 7.0; }, params, analytic, 1e-4), 1e-10);
}

TEST(FiniteDiff, WrongGradientIsDetected) {
  Tensor2D p{{1.0}};
  Tensor2D* params[] = {&p};
  const Tensor2D analytic[] = {Tensor2D{{5.0}}};
  EXPECT_GT(finite_diff_check([&] { return p(0, 0) * p(0, 0); }, params, analytic, 1e-5), 0.5);
}

TEST(FiniteDiff, EpsOutsideDomainRejected) {
  Tensor2D p{{1.0}};
  Tensor2D* params[] = {&p};
  const Tensor2D analytic[] = {Tensor2D{{0.0}}};
  EXPECT_THROW(finite_diff_check([] { return 0.0; }, params, analytic, 1e-2), ConfigError);
  EXPECT_THROW(finite_diff_check([] { return 0.0; }, params, analytic, 1e-9), ConfigError);
}

TEST(FiniteDiff, NonFiniteEvaluationPropagates) {
  Tensor2D p{{1.0}};
  Tensor2D* params[] = {&p};
  const Tensor2D analytic[] = {Tensor2D{{0.0}}};
  auto f = [] { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW(finite_diff_check(f, params, analytic, 1e-5), NumericError);
}

TEST(Reparam, ClampedLogVarCollapsesToMean) {
  Rng rng(1);
  const Tensor2D mu{{1.0, 2.0}};
  const Tensor2D lv(1, 2, -1e300);
  const Tensor2D z = gaussian_reparam_sample(mu, lv, rng);
  EXPECT_NEAR(z(0, 0), 1.0, 0.05);
  EXPECT_NEAR(z(0, 1), 2.0, 0.05);
  EXPECT_TRUE(z.all_finite());
}

TEST(Reparam, DeterministicGivenRngState) {
  const Tensor2D mu{{0.3, -0.2}, {1.0, 0.0}};
  const Tensor2D lv{{0.1, -0.5}, {0.0, 2.0}};
  Rng a(77), b(77);
  EXPECT_EQ(gaussian_reparam_sample(mu, lv, a), gaussian_reparam_sample(mu, lv, b));
}

TEST(Reparam, MonteCarloMean) {
  Rng rng(123);
  const std::size_t n = 100000;
  const Tensor2D z = gaussian_reparam_sample(Tensor2D(n, 3, 0.0), Tensor2D(n, 3, 0.0), rng);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < n; ++r) s += z(r, c);
    EXPECT_NEAR(s / static_cast<double>(n), 0.0, 0.02);
  }
}

TEST(Reparam, GradientTreatsNoiseAsConstant) {
  Rng rng(5);
  Tape t;
  Var mu = t.parameter(Tensor2D{{0.5, -0.5}});
  Var lv = t.parameter(Tensor2D{{0.2, 0.4}});
  Var z = gaussian_reparam_sample(mu, lv, rng);
  const Gradients g = t.backward(ad::sum(z));
  EXPECT_EQ(g.of(mu), (Tensor2D{{1.0, 1.0}}));
  // dz/dlv = 0.5 * exp(lv/2) * eps = 0.5 * (z - mu)
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(g.of(lv)(0, c), 0.5 * (z.value()(0, c) - mu.value()(0, c)), 1e-14);
  }
}
