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

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/rng.hpp"
#include "vfedssd/data/schema.hpp"
#include "vfedssd/numeric/layers.hpp"

namespace vfedssd {

/// Hidden widths of a bottom model; the last width is the output width. An
/// empty list makes the bottom the identity on the embedded input.
struct BottomSpec {
  std::vector<std::size_t> hidden{64, 64};
  Activation output_activation = Activation::ReLU;
};

/// Hidden ReLU widths of the top model, followed by a one-unit logit head.
struct TopSpec {
  std::vector<std::size_t> hidden{64, 64};
};

/// Per-party feature encoder f: embeds categorical fields, passes numerical
/// fields through, then applies a dense stack.
template <class T>
class BottomModel {
 public:
  BottomModel() = default;
  BottomModel(PartySchema schema, BottomSpec spec) : schema_(std::move(schema)), spec_(std::move(spec)) {
    schema_.validate();
    for (const auto& f : schema_.fields) {
      if (f.kind == FieldKind::Categorical) embeddings_.emplace_back(f.buckets, f.embed_dim);
    }
    std::size_t in = schema_.post_embed_dim();
    for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
      const bool last = i + 1 == spec_.hidden.size();
      layers_.emplace_back(in, spec_.hidden[i], last ? spec_.output_activation : Activation::ReLU);
      in = spec_.hidden[i];
    }
  }

  void init(Rng& rng) {
    for (auto& e : embeddings_) e.init_uniform(rng);
    for (auto& l : layers_) l.init_glorot(rng);
  }

  const PartySchema& schema() const { return schema_; }
  const BottomSpec& spec() const { return spec_; }
  std::size_t in_width() const { return schema_.width(); }
  std::size_t embedded_width() const { return schema_.post_embed_dim(); }
  std::size_t out_dim() const { return layers_.empty() ? embedded_width() : layers_.back().out(); }
  std::vector<DenseLayer<T>>& layers() { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }
  std::vector<EmbeddingTable<T>>& embeddings() { return embeddings_; }
  const std::vector<EmbeddingTable<T>>& embeddings() const { return embeddings_; }

  BasicMatrix<T> forward(const BasicMatrix<T>& x, bool record = false) {
    if (x.cols() != in_width()) {
      throw DimensionError("party " + std::string(party_name(schema_.party)) + " bottom expects " +
                           std::to_string(in_width()) + " columns, got " + shape_string(x));
    }
    BasicMatrix<T> h = embed(x, record);
    for (auto& l : layers_) h = l.forward(h, record);
    return h;
  }

  /// Backpropagates dL/dh through the recorded forward pass into the
  /// parameter gradients. Party inputs are data, so no input gradient.
  void backward(const BasicMatrix<T>& dh) {
    BasicMatrix<T> d = dh;
    const bool need_embed_grad = !embeddings_.empty();
    for (std::size_t i = layers_.size(); i-- > 0;) {
      d = layers_[i].backward(d, i > 0 || need_embed_grad);
    }
    if (!need_embed_grad) return;
    if (d.cols() != embedded_width()) throw DimensionError("bottom gradient has shape " + shape_string(d));
    std::size_t col = 0;
    std::size_t e = 0;
    for (const auto& f : schema_.fields) {
      const std::size_t w = f.input_width();
      if (f.kind == FieldKind::Categorical) embeddings_[e++].backward(slice_cols(d, col, col + w));
      col += w;
    }
  }

  void clear_record() {
    for (auto& e : embeddings_) e.clear_record();
    for (auto& l : layers_) l.clear_record();
  }

  void append_params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    std::size_t e = 0;
    for (const auto& f : schema_.fields) {
      if (f.kind == FieldKind::Categorical) embeddings_[e++].append_params(out, prefix + ".emb." + f.name);
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].append_params(out, prefix + ".dense" + std::to_string(i));
  }

  template <class U>
  BottomModel<U> cast() const {
    BottomModel<U> out(schema_, spec_);
    for (std::size_t i = 0; i < embeddings_.size(); ++i) out.embeddings()[i] = embeddings_[i].template cast<U>();
    for (std::size_t i = 0; i < layers_.size(); ++i) out.layers()[i] = layers_[i].template cast<U>();
    return out;
  }

 private:
  BasicMatrix<T> embed(const BasicMatrix<T>& x, bool record) {
    const std::size_t m = x.rows();
    BasicMatrix<T> out(m, embedded_width());
    std::size_t col = 0;
    std::size_t e = 0;
    std::vector<std::size_t> idx(m);
    for (std::size_t c = 0; c < schema_.fields.size(); ++c) {
      const auto& f = schema_.fields[c];
      if (f.kind == FieldKind::Numerical) {
        for (std::size_t r = 0; r < m; ++r) out(r, col) = x(r, c);
        col += 1;
        continue;
      }
      for (std::size_t r = 0; r < m; ++r) {
        const T v = x(r, c);
        if (!(v >= T{0}) || v != std::floor(v)) {
          throw DimensionError("field " + f.name + " holds a non-index value at row " + std::to_string(r));
        }
        idx[r] = static_cast<std::size_t>(v);
      }
      const BasicMatrix<T> rows = embeddings_[e++].forward(idx, record);
      for (std::size_t r = 0; r < m; ++r) {
        std::copy_n(rows.row(r).data(), f.embed_dim, out.row(r).data() + col);
      }
      col += f.embed_dim;
    }
    return out;
  }

  PartySchema schema_;
  BottomSpec spec_;
  std::vector<EmbeddingTable<T>> embeddings_;
  std::vector<DenseLayer<T>> layers_;
};

/// Fusion head g: ReLU hidden layers and a one-unit identity logit layer.
template <class T>
class TopModel {
 public:
  TopModel() = default;
  TopModel(std::size_t in, TopSpec spec) : spec_(std::move(spec)) {
    for (std::size_t w : spec_.hidden) {
      layers_.emplace_back(in, w, Activation::ReLU);
      in = w;
    }
    layers_.emplace_back(in, 1, Activation::Identity);
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l.init_glorot(rng);
  }

  std::size_t in_width() const { return layers_.front().in(); }
  const TopSpec& spec() const { return spec_; }
  std::vector<DenseLayer<T>>& layers() { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }

  BasicMatrix<T> forward(const BasicMatrix<T>& x, bool record = false) {
    BasicMatrix<T> h = x;
    for (auto& l : layers_) h = l.forward(h, record);
    return h;
  }

  /// Returns dL/d(input).
  BasicMatrix<T> backward(const BasicMatrix<T>& dlogits) {
    BasicMatrix<T> d = dlogits;
    for (std::size_t i = layers_.size(); i-- > 0;) d = layers_[i].backward(d, true);
    return d;
  }

  void clear_record() {
    for (auto& l : layers_) l.clear_record();
  }

  void append_params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].append_params(out, prefix + ".dense" + std::to_string(i));
  }

  template <class U>
  TopModel<U> cast() const {
    TopModel<U> out(in_width(), spec_);
    for (std::size_t i = 0; i < layers_.size(); ++i) out.layers()[i] = layers_[i].template cast<U>();
    return out;
  }

 private:
  TopSpec spec_;
  std::vector<DenseLayer<T>> layers_;
};

/// Single-party model g(f(x)).
template <class T>
class LocalModel {
 public:
  LocalModel() = default;
  LocalModel(PartySchema schema, const BottomSpec& bottom, const TopSpec& top, std::string bottom_name = "bottom_a")
      : bottom_(std::move(schema), bottom), bottom_name_(std::move(bottom_name)) {
    top_ = TopModel<T>(bottom_.out_dim(), top);
  }

  void init(Rng& bottom_rng, Rng& top_rng) {
    bottom_.init(bottom_rng);
    top_.init(top_rng);
  }

  BottomModel<T>& bottom() { return bottom_; }
  const BottomModel<T>& bottom() const { return bottom_; }
  TopModel<T>& top() { return top_; }
  const TopModel<T>& top() const { return top_; }
  const std::string& bottom_name() const { return bottom_name_; }

  BasicMatrix<T> forward(const BasicMatrix<T>& x, bool record = false) {
    return top_.forward(bottom_.forward(x, record), record);
  }

  void backward(const BasicMatrix<T>& dlogits) { bottom_.backward(top_.backward(dlogits)); }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    bottom_.append_params(out, bottom_name_);
    top_.append_params(out, "top");
    return out;
  }

  template <class U>
  LocalModel<U> cast() const {
    LocalModel<U> out(bottom_.schema(), bottom_.spec(), top_.spec(), bottom_name_);
    out.bottom() = bottom_.template cast<U>();
    out.top() = top_.template cast<U>();
    return out;
  }

 private:
  BottomModel<T> bottom_;
  TopModel<T> top_;
  std::string bottom_name_;
};

/// The composite g_A([f_A(x_A) | f_B(x_B)]) held in one process. Serves as
/// the monolithic reference for the federated runtime and as the shape of
/// a full checkpoint.
template <class T>
class SplitModel {
 public:
  SplitModel() = default;
  SplitModel(PartySchema schema_a, PartySchema schema_b, const BottomSpec& bottom_a, const BottomSpec& bottom_b,
             const TopSpec& top)
      : bottom_a_(std::move(schema_a), bottom_a), bottom_b_(std::move(schema_b), bottom_b) {
    top_ = TopModel<T>(bottom_a_.out_dim() + bottom_b_.out_dim(), top);
  }

  BottomModel<T>& bottom_a() { return bottom_a_; }
  const BottomModel<T>& bottom_a() const { return bottom_a_; }
  BottomModel<T>& bottom_b() { return bottom_b_; }
  const BottomModel<T>& bottom_b() const { return bottom_b_; }
  TopModel<T>& top() { return top_; }
  const TopModel<T>& top() const { return top_; }

  BasicMatrix<T> forward(const BasicMatrix<T>& x_a, const BasicMatrix<T>& x_b, bool record = false) {
    const BasicMatrix<T> h_a = bottom_a_.forward(x_a, record);
    const BasicMatrix<T> h_b = bottom_b_.forward(x_b, record);
    return top_.forward(concat_cols(h_a, h_b), record);
  }

  void backward(const BasicMatrix<T>& dlogits) {
    const BasicMatrix<T> d = top_.backward(dlogits);
    const std::size_t da = bottom_a_.out_dim();
    bottom_a_.backward(slice_cols(d, 0, da));
    bottom_b_.backward(slice_cols(d, da, d.cols()));
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    bottom_a_.append_params(out, "bottom_a");
    bottom_b_.append_params(out, "bottom_b");
    top_.append_params(out, "top");
    return out;
  }

  template <class U>
  SplitModel<U> cast() const {
    SplitModel<U> out(bottom_a_.schema(), bottom_b_.schema(), bottom_a_.spec(), bottom_b_.spec(), top_.spec());
    out.bottom_a() = bottom_a_.template cast<U>();
    out.bottom_b() = bottom_b_.template cast<U>();
    out.top() = top_.template cast<U>();
    return out;
  }

 private:
  BottomModel<T> bottom_a_;
  BottomModel<T> bottom_b_;
  TopModel<T> top_;
};

}  // namespace vfedssd
