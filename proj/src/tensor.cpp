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

#include "crossalign/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "crossalign/error.hpp"

namespace crossalign {

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

Tensor2D::Tensor2D(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged initializer for Tensor2D");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Tensor2D Tensor2D::row_vector(std::span<const double> values) {
  return Tensor2D(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Tensor2D::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor2D::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor2D& a, const Tensor2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

namespace kernels {

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
  }
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Tensor2D out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* __restrict orow = out.data() + i * m;
    const double* arow = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* __restrict brow = b.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor2D affine(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b) {
  if (x.cols() != w.rows()) {
    throw DimensionError("affine: input " + x.shape_string() + " does not conform to weight " +
                         w.shape_string());
  }
  if (!b.empty() && (b.rows() != 1 || b.cols() != w.cols())) {
    throw DimensionError("affine: bias " + b.shape_string() + " does not conform to weight " +
                         w.shape_string());
  }
  Tensor2D out = matmul(x, w);
  if (!b.empty()) {
    for (std::size_t i = 0; i < out.rows(); ++i) {
      auto r = out.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += b(0, j);
    }
  }
  return out;
}

Tensor2D matmul_bt(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_bt: cannot multiply " + a.shape_string() + " by transpose of " +
                         b.shape_string());
  }
  Tensor2D out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto br = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < ar.size(); ++k) acc += ar[k] * br[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Tensor2D matmul_at(const Tensor2D& a, const Tensor2D& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_at: cannot multiply transpose of " + a.shape_string() + " by " +
                         b.shape_string());
  }
  const std::size_t m = b.cols();
  Tensor2D out(a.cols(), m);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* arow = a.data() + r * a.cols();
    const double* __restrict brow = b.data() + r * m;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = arow[i];
      if (ari == 0.0) continue;
      double* __restrict orow = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += ari * brow[j];
    }
  }
  return out;
}

Tensor2D relu(const Tensor2D& x) {
  Tensor2D out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor2D l2_normalize_rows(const Tensor2D& x) {
  Tensor2D out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm >= 1e-12)) {
      throw DegenerateVectorError("l2_normalize_rows: row " + std::to_string(i) +
                                  " has norm below 1e-12 (collapsed latent code)");
    }
    for (double& v : out.row(i)) v /= norm;
  }
  return out;
}

Tensor2D slice_cols(const Tensor2D& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + x.shape_string());
  }
  Tensor2D out(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::copy_n(x.row(i).begin() + static_cast<std::ptrdiff_t>(begin), count, out.row(i).begin());
  }
  return out;
}

Tensor2D gather_rows(const Tensor2D& x, std::span<const std::size_t> rows) {
  Tensor2D out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                           x.shape_string());
    }
    std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace kernels
}  // namespace crossalign
