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

#include "vfedssd/numeric/adam.hpp"

#include <cmath>

namespace vfedssd {

void AdamState::step(std::span<const ParamRef<float>> params) {
  for (const auto& p : params) {
    if (!p.value->same_shape(*p.grad)) {
      throw DimensionError("gradient shape of " + p.name + " does not match parameter");
    }
    if (!p.grad->all_finite()) throw NumericError("non-finite gradient for parameter " + p.name);
  }

  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);

  for (const auto& p : params) {
    auto& mom = moments_[p.name];
    const std::size_t n = p.value->size();
    if (mom.m.empty()) {
      mom.m.assign(n, 0.0f);
      mom.v.assign(n, 0.0f);
    } else if (mom.m.size() != n) {
      throw DimensionError("optimizer moments for " + p.name + " do not match parameter size");
    }

    const std::size_t cols = p.value->cols();
    std::vector<char> decay_row;
    if (p.decay == Decay::TouchedRows && p.touched_rows != nullptr) {
      decay_row.assign(p.value->rows(), 0);
      for (std::size_t r : *p.touched_rows) decay_row[r] = 1;
    }

    auto value = p.value->values();
    const auto grad = p.grad->values();
    for (std::size_t i = 0; i < n; ++i) {
      double g = grad[i];
      const bool decays = p.decay == Decay::All || (!decay_row.empty() && decay_row[i / cols] != 0);
      if (decays) g += config_.l2 * static_cast<double>(value[i]);
      const double m = b1 * mom.m[i] + (1.0 - b1) * g;
      const double v = b2 * mom.v[i] + (1.0 - b2) * g * g;
      mom.m[i] = static_cast<float>(m);
      mom.v[i] = static_cast<float>(v);
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      value[i] = static_cast<float>(static_cast<double>(value[i]) -
                                    config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

const std::vector<float>* AdamState::first_moment(const std::string& name) const {
  auto it = moments_.find(name);
  return it == moments_.end() ? nullptr : &it->second.m;
}

const std::vector<float>* AdamState::second_moment(const std::string& name) const {
  auto it = moments_.find(name);
  return it == moments_.end() ? nullptr : &it->second.v;
}

}  // namespace vfedssd
