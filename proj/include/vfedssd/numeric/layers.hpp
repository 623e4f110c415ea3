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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/rng.hpp"
#include "vfedssd/numeric/matrix.hpp"

namespace vfedssd {

enum class Activation { Identity, ReLU };

/// Which elements of a parameter receive the L2 term.
enum class Decay {
  None,         // biases
  All,          // dense weights
  TouchedRows,  // embedding rows looked up in the current batch
};

/// Non-owning handle to a parameter tensor and its gradient, as seen by the
/// optimizer and the gradient checker.
template <class T>
struct ParamRef {
  std::string name;
  BasicMatrix<T>* value = nullptr;
  BasicMatrix<T>* grad = nullptr;
  Decay decay = Decay::None;
  const std::vector<std::size_t>* touched_rows = nullptr;
};

/// y = act(x W + b), W is (in x out). Reductions accumulate in double.
template <class T>
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : weight_(in, out), bias_(1, out), grad_weight_(in, out), grad_bias_(1, out), act_(act) {}

  /// Glorot-uniform weights in +-sqrt(6 / (in + out)), zero bias.
  void init_glorot(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in() + out()));
    for (T& w : weight_.values()) w = static_cast<T>(rng.uniform(-limit, limit));
    bias_.fill(T{0});
  }

  std::size_t in() const { return weight_.rows(); }
  std::size_t out() const { return weight_.cols(); }
  Activation activation() const { return act_; }

  BasicMatrix<T>& weight() { return weight_; }
  const BasicMatrix<T>& weight() const { return weight_; }
  BasicMatrix<T>& bias() { return bias_; }
  const BasicMatrix<T>& bias() const { return bias_; }
  const BasicMatrix<T>& grad_weight() const { return grad_weight_; }
  const BasicMatrix<T>& grad_bias() const { return grad_bias_; }

  /// With record=true the input and pre-activation are kept for backward().
  BasicMatrix<T> forward(const BasicMatrix<T>& x, bool record = false) {
    if (x.cols() != in()) {
      throw DimensionError("dense layer expects " + std::to_string(in()) + " input columns, got " +
                           shape_string(x));
    }
    const std::size_t m = x.rows();
    const std::size_t n = out();
    BasicMatrix<T> pre(m, n);
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const auto xi = x.row(i);
      for (std::size_t k = 0; k < xi.size(); ++k) {
        const double a = static_cast<double>(xi[k]);
        if (a == 0.0) continue;
        const T* w = weight_.row(k).data();
        for (std::size_t j = 0; j < n; ++j) acc[j] += a * static_cast<double>(w[j]);
      }
      T* p = pre.row(i).data();
      const T* b = bias_.values().data();
      for (std::size_t j = 0; j < n; ++j) p[j] = static_cast<T>(acc[j] + static_cast<double>(b[j]));
    }
    BasicMatrix<T> y = pre;
    if (act_ == Activation::ReLU) {
      for (T& v : y.values()) v = v > T{0} ? v : T{0};
    }
    if (record) tape_ = Tape{x, std::move(pre)};
    return y;
  }

  /// Consumes the recorded forward pass: overwrites the parameter gradients
  /// and returns dL/dx (empty when input_grad is false).
  BasicMatrix<T> backward(const BasicMatrix<T>& dy, bool input_grad = true) {
    if (!tape_) throw StateError("dense backward without a recorded forward");
    const BasicMatrix<T>& x = tape_->input;
    const BasicMatrix<T>& pre = tape_->preactivation;
    if (!dy.same_shape(pre)) {
      throw DimensionError("upstream gradient " + shape_string(dy) + " does not match output " +
                           shape_string(pre));
    }
    const std::size_t m = x.rows();
    const std::size_t n = out();
    const std::size_t k_in = in();

    BasicMatrix<T> dpre = dy;
    if (act_ == Activation::ReLU) {
      auto d = dpre.values();
      const auto p = pre.values();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(p[i] > T{0})) d[i] = T{0};
      }
    }

    std::vector<double> gw(k_in * n, 0.0);
    std::vector<double> gb(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const T* di = dpre.row(i).data();
      const auto xi = x.row(i);
      for (std::size_t k = 0; k < k_in; ++k) {
        const double a = static_cast<double>(xi[k]);
        if (a == 0.0) continue;
        double* g = gw.data() + k * n;
        for (std::size_t j = 0; j < n; ++j) g[j] += a * static_cast<double>(di[j]);
      }
      for (std::size_t j = 0; j < n; ++j) gb[j] += static_cast<double>(di[j]);
    }
    for (std::size_t i = 0; i < gw.size(); ++i) grad_weight_.values()[i] = static_cast<T>(gw[i]);
    for (std::size_t j = 0; j < n; ++j) grad_bias_.values()[j] = static_cast<T>(gb[j]);

    BasicMatrix<T> dx;
    if (input_grad) {
      dx = BasicMatrix<T>(m, k_in);
      for (std::size_t i = 0; i < m; ++i) {
        const T* di = dpre.row(i).data();
        T* dxi = dx.row(i).data();
        for (std::size_t k = 0; k < k_in; ++k) {
          const T* w = weight_.row(k).data();
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += static_cast<double>(di[j]) * static_cast<double>(w[j]);
          dxi[k] = static_cast<T>(s);
        }
      }
    }
    tape_.reset();
    return dx;
  }

  bool has_record() const { return tape_.has_value(); }

  /// Pre-activation of the recorded forward pass, or nullptr.
  const BasicMatrix<T>* recorded_preactivation() const {
    return tape_ ? &tape_->preactivation : nullptr;
  }

  void clear_record() { tape_.reset(); }

  void append_params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight_, &grad_weight_, Decay::All, nullptr});
    out.push_back({prefix + ".bias", &bias_, &grad_bias_, Decay::None, nullptr});
  }

  template <class U>
  DenseLayer<U> cast() const {
    DenseLayer<U> out(in(), this->out(), act_);
    out.weight() = weight_.template cast<U>();
    out.bias() = bias_.template cast<U>();
    return out;
  }

 private:
  struct Tape {
    BasicMatrix<T> input;
    BasicMatrix<T> preactivation;
  };

  BasicMatrix<T> weight_;
  BasicMatrix<T> bias_;
  BasicMatrix<T> grad_weight_;
  BasicMatrix<T> grad_bias_;
  Activation act_ = Activation::Identity;
  std::optional<Tape> tape_;
};

/// Hash-embedding table (buckets x dim) with row gather / scatter-add.
template <class T>
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t buckets, std::size_t dim)
      : table_(buckets, dim), grad_(buckets, dim) {
    if (buckets == 0 || dim == 0) throw ValidationError("embedding table needs buckets>0 and dim>0");
  }

  /// Uniform in +-sqrt(6 / (1 + dim)): Glorot with a one-hot fan-in.
  void init_uniform(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(1 + dim()));
    for (T& w : table_.values()) w = static_cast<T>(rng.uniform(-limit, limit));
  }

  std::size_t buckets() const { return table_.rows(); }
  std::size_t dim() const { return table_.cols(); }
  BasicMatrix<T>& table() { return table_; }
  const BasicMatrix<T>& table() const { return table_; }
  const BasicMatrix<T>& grad() const { return grad_; }
  const std::vector<std::size_t>& touched_rows() const { return touched_; }

  BasicMatrix<T> forward(std::span<const std::size_t> indices, bool record = false) {
    BasicMatrix<T> out(indices.size(), dim());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= buckets()) {
        throw DimensionError("embedding index " + std::to_string(indices[i]) + " outside [0, " +
                             std::to_string(buckets()) + ")");
      }
      std::copy_n(table_.row(indices[i]).data(), dim(), out.row(i).data());
    }
    if (record) recorded_ = std::vector<std::size_t>(indices.begin(), indices.end());
    return out;
  }

  /// Scatter-adds dy into the rows used by the recorded forward. Gradient
  /// rows not touched by this batch are zero afterwards.
  void backward(const BasicMatrix<T>& dy) {
    if (!recorded_) throw StateError("embedding backward without a recorded forward");
    const auto& idx = *recorded_;
    if (dy.rows() != idx.size() || dy.cols() != dim()) {
      throw DimensionError("embedding upstream gradient has shape " + shape_string(dy));
    }
    for (std::size_t r : touched_) std::fill_n(grad_.row(r).data(), dim(), T{0});
    touched_ = idx;
    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());

    if (scratch_.size() != table_.size()) scratch_.assign(table_.size(), 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* s = scratch_.data() + idx[i] * dim();
      const T* g = dy.row(i).data();
      for (std::size_t j = 0; j < dim(); ++j) s[j] += static_cast<double>(g[j]);
    }
    for (std::size_t r : touched_) {
      double* s = scratch_.data() + r * dim();
      T* g = grad_.row(r).data();
      for (std::size_t j = 0; j < dim(); ++j) {
        g[j] = static_cast<T>(s[j]);
        s[j] = 0.0;
      }
    }
    recorded_.reset();
  }

  void clear_record() { recorded_.reset(); }

  void append_params(std::vector<ParamRef<T>>& out, const std::string& name) {
    out.push_back({name, &table_, &grad_, Decay::TouchedRows, &touched_});
  }

  template <class U>
  EmbeddingTable<U> cast() const {
    EmbeddingTable<U> out(buckets(), dim());
    out.table() = table_.template cast<U>();
    return out;
  }

 private:
  BasicMatrix<T> table_;
  BasicMatrix<T> grad_;
  std::vector<std::size_t> touched_;
  std::optional<std::vector<std::size_t>> recorded_;
  std::vector<double> scratch_;
};

}  // namespace vfedssd
