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

#include "crossalign/error.hpp"
#include "crossalign/rng.hpp"
#include "crossalign/tensor.hpp"
#include "support/oracles.hpp"

using namespace crossalign;

TEST(Affine, IdentityWeights) {
  const Tensor2D x{{2, 3}};
  const Tensor2D w{{1, 0}, {0, 1}};
  const Tensor2D b{{0, 0}};
  EXPECT_EQ(kernels::affine(x, w, b), (Tensor2D{{2, 3}}));
}

TEST(Affine, ColumnOfOnesPlusBias) {
  EXPECT_EQ(kernels::affine(Tensor2D{{2, 3}}, Tensor2D{{1}, {1}}, Tensor2D{{1}}), (Tensor2D{{6}}));
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
  try {
    kernels::affine(Tensor2D(2, 3), Tensor2D(4, 2), Tensor2D(1, 2));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("4x2"), std::string::npos) << e.what();
  }
}

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor2D a = fixture::random_tensor(rng, 3, 4);
    const Tensor2D b = fixture::random_tensor(rng, 4, 2);
    const auto ref = oracle::matmul(oracle::to_matrix(a), oracle::to_matrix(b));
    const Tensor2D got = kernels::matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got(i, j), ref[i][j], 1e-12);
    }
  }
}

TEST(Matmul, TransposedVariantsAgree) {
  Rng rng(12);
  const Tensor2D a = fixture::random_tensor(rng, 5, 3);
  const Tensor2D b = fixture::random_tensor(rng, 4, 3);
  const Tensor2D c = fixture::random_tensor(rng, 5, 2);
  Tensor2D bt(3, 4), at(3, 5);
  for (std::size_t i = 0; i < 4; ++i) for (std::size_t j = 0; j < 3; ++j) bt(j, i) = b(i, j);
  for (std::size_t i = 0; i < 5; ++i) for (std::size_t j = 0; j < 3; ++j) at(j, i) = a(i, j);
  const auto bt_ref = oracle::matmul(oracle::to_matrix(a), oracle::to_matrix(bt));
  const auto at_ref = oracle::matmul(oracle::to_matrix(at), oracle::to_matrix(c));
  const Tensor2D got_bt = kernels::matmul_bt(a, b);
  const Tensor2D got_at = kernels::matmul_at(a, c);
  for (std::size_t i = 0; i < 5; ++i) for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(got_bt(i, j), bt_ref[i][j], 1e-12);
  for (std::size_t i = 0; i < 3; ++i) for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got_at(i, j), at_ref[i][j], 1e-12);
}

TEST(Relu, SignCases) {
  EXPECT_EQ(kernels::relu(Tensor2D{{-1, 0, 2}}), (Tensor2D{{0, 0, 2}}));
  const Tensor2D pos{{0.5, 3}, {1, 2}};
  EXPECT_EQ(kernels::relu(pos), pos);
}

TEST(L2Normalize, ThreeFourFive) {
  const Tensor2D y = kernels::l2_normalize_rows(Tensor2D{{3, 4}});
  EXPECT_NEAR(y(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(y(0, 1), 0.8, 1e-15);
}

TEST(L2Normalize, UnitRowsUnchangedAndNormsOne) {
  const Tensor2D u{{1, 0, 0}, {0, 0.6, 0.8}};
  const Tensor2D y = kernels::l2_normalize_rows(u);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(y.values()[i], u.values()[i], 1e-15);
  Rng rng(3);
  const Tensor2D r = kernels::l2_normalize_rows(fixture::random_tensor(rng, 20, 7, 100.0));
  for (std::size_t i = 0; i < r.rows(); ++i) {
    double n = 0;
    for (double v : r.row(i)) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  }
}

TEST(L2Normalize, ZeroRowIsDegenerate) {
  EXPECT_THROW(kernels::l2_normalize_rows(Tensor2D{{0, 0}}), DegenerateVectorError);
}

TEST(Tensor2D, LengthMismatchRejected) {
  EXPECT_THROW(Tensor2D(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor2D, SliceAndGather) {
  const Tensor2D x{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(kernels::slice_cols(x, 1, 2), (Tensor2D{{2, 3}, {5, 6}}));
  const std::vector<std::size_t> rows{1, 1, 0};
  EXPECT_EQ(kernels::gather_rows(x, rows), (Tensor2D{{4, 5, 6}, {4, 5, 6}, {1, 2, 3}}));
  EXPECT_THROW(kernels::slice_cols(x, 2, 2), DimensionError);
}
