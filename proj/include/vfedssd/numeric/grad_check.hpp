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
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "vfedssd/common/hash.hpp"
#include "vfedssd/numeric/layers.hpp"

namespace vfedssd {

/// One evaluation of the 64-bit shadow model.
struct ShadowEval {
  double loss = 0.0;
  /// Digest of the ReLU on/off pattern; differing digests between the +h and
  /// -h evaluations mean the perturbation crossed a kink.
  std::uint64_t kink_signature = 0;
};

struct GradCheckOptions {
  double tolerance = 1e-3;
  double step = 1e-3;
  /// Lower bound on the relative-error denominator, so gradients that are
  /// zero up to float rounding are compared absolutely.
  double grad_floor = 1e-3;
  /// Checks at most this many evenly strided elements per tensor (0 = all).
  std::size_t max_per_tensor = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  bool passed = false;
};

/// Adds the on/off pattern of a recorded ReLU layer to a signature.
template <class T>
void add_relu_signature(Fnv1a64& h, const DenseLayer<T>& layer) {
  const auto* pre = layer.recorded_preactivation();
  if (pre == nullptr || layer.activation() != Activation::ReLU) return;
  for (T v : pre->values()) h.update_byte(v > T{0} ? 1 : 0);
}

/// Compares analytic float gradients against central differences of a
/// 64-bit shadow. analytic[i] and shadow[i] must describe the same tensor;
/// shadow_loss re-evaluates the shadow model at its current values.
inline GradCheckReport grad_check(std::span<const ParamRef<float>> analytic,
                                  std::span<const ParamRef<double>> shadow,
                                  const std::function<ShadowEval()>& shadow_loss,
                                  const GradCheckOptions& options = {}) {
  if (analytic.size() != shadow.size()) throw DimensionError("grad_check tensor lists differ in length");
  GradCheckReport report;
  for (std::size_t t = 0; t < analytic.size(); ++t) {
    const auto& a = analytic[t];
    const auto& s = shadow[t];
    if (a.grad->size() != s.value->size()) throw DimensionError("grad_check shape mismatch for " + a.name);
    const std::size_t n = s.value->size();
    const std::size_t stride =
        options.max_per_tensor == 0 || n <= options.max_per_tensor ? 1 : n / options.max_per_tensor;
    for (std::size_t i = 0; i < n; i += stride) {
      double& x = s.value->values()[i];
      const double saved = x;
      x = saved + options.step;
      const ShadowEval plus = shadow_loss();
      x = saved - options.step;
      const ShadowEval minus = shadow_loss();
      x = saved;
      if (plus.kink_signature != minus.kink_signature) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * options.step);
      const double an = static_cast<double>(a.grad->values()[i]);
      const double denom = std::max({std::abs(an), std::abs(numeric), options.grad_floor});
      const double err = std::abs(an - numeric) / denom;
      ++report.checked;
      if (err > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = err;
        report.worst_param = a.name;
        report.worst_index = i;
        report.worst_analytic = an;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.checked > 0 && report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace vfedssd
