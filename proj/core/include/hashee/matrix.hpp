// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace hashee {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a (r x k) * b (k x c). Throws ShapeError when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

// Row-wise softmax with max subtraction. Normalization multiplies each
// exponential by the reciprocal of the row sum.
Matrix softmax_rows(const Matrix& a);

inline constexpr double kLayerNormEps = 1e-5;

// Per-row (x - mean) / sqrt(var + eps) * gain + bias, population variance.
Matrix layer_norm(const Matrix& a, std::span<const double> gain, std::span<const double> bias,
                  double eps = kLayerNormEps);

Matrix relu(const Matrix& a);

Matrix transpose(const Matrix& a);

// Elementwise a + b; shapes must match.
Matrix add(const Matrix& a, const Matrix& b);

// Rows of `a` selected by `indices`, in order.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);

// Columns [begin, begin + count) of `a`.
Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace hashee
