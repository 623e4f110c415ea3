// Copyright 2026 The VFedSSD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

/// Dense row-major 2-D array. Matrix (float) carries every activation,
/// gradient and parameter; MatrixD is the 64-bit shadow used by gradient
/// checks.
template <class T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  static BasicMatrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return BasicMatrix(r, c, std::move(data));
  }

  static BasicMatrix column(std::span<const T> values) {
    return BasicMatrix(values.size(), 1, std::vector<T>(values.begin(), values.end()));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <class U>
  BasicMatrix<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return BasicMatrix<U>(rows_, cols_, std::move(out));
  }

  bool same_shape(const BasicMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

template <class T>
std::string shape_string(const BasicMatrix<T>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// Bitwise equality (distinguishes -0 from +0, treats identical NaN payloads
/// as equal). Used where results must be reproduced exactly.
template <class T>
bool bit_equal(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  return a.same_shape(b) &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(T)) == 0;
}

template <class T>
void require_finite(const BasicMatrix<T>& m, std::string_view what) {
  if (!m.all_finite()) throw NumericError("non-finite value in " + std::string(what));
}

template <class T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& m, std::span<const std::size_t> rows) {
  BasicMatrix<T> out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) throw DimensionError("row index out of range");
    std::copy_n(m.row(rows[i]).data(), m.cols(), out.row(i).data());
  }
  return out;
}

/// [a | b]: row-wise concatenation of columns.
template <class T>
BasicMatrix<T> concat_cols(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols rows differ: " + shape_string(a) + " vs " + shape_string(b));
  }
  BasicMatrix<T> out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.row(r).data(), a.cols(), out.row(r).data());
    std::copy_n(b.row(r).data(), b.cols(), out.row(r).data() + a.cols());
  }
  return out;
}

/// Columns [begin, end) of m.
template <class T>
BasicMatrix<T> slice_cols(const BasicMatrix<T>& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.cols()) throw DimensionError("slice_cols out of range");
  BasicMatrix<T> out(m.rows(), end - begin);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::copy_n(m.row(r).data() + begin, end - begin, out.row(r).data());
  }
  return out;
}

/// Rows [begin, end) of m.
template <class T>
BasicMatrix<T> slice_rows(const BasicMatrix<T>& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw DimensionError("slice_rows out of range");
  BasicMatrix<T> out(end - begin, m.cols());
  std::copy_n(m.values().data() + begin * m.cols(), (end - begin) * m.cols(), out.values().data());
  return out;
}

/// Vertical stack of matrices with equal column counts.
template <class T>
BasicMatrix<T> stack_rows(std::span<const BasicMatrix<T>> parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.empty() ? 0 : parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("stack_rows column mismatch");
    rows += p.rows();
  }
  std::vector<T> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) data.insert(data.end(), p.values().begin(), p.values().end());
  return BasicMatrix<T>(rows, cols, std::move(data));
}

}  // namespace vfedssd
