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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vfedssd/numeric/layers.hpp"

namespace vfedssd {

/// Adam hyperparameters. beta1/beta2/epsilon default to the common
/// 0.9/0.999/1e-8; l2 is the coefficient of the L2 term added to the
/// gradient before the moment update.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 0.0;
};

/// Bias-corrected Adam with L2 regularization. Moments are keyed by
/// parameter name and created on first use.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  /// Applies one update to every parameter. Throws NumericError naming the
  /// parameter if any gradient is non-finite; nothing is modified then.
  void step(std::span<const ParamRef<float>> params);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  const std::vector<float>* first_moment(const std::string& name) const;
  const std::vector<float>* second_moment(const std::string& name) const;

 private:
  struct Moments {
    std::vector<float> m;
    std::vector<float> v;
  };

  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

inline void adam_step(AdamState& state, std::span<const ParamRef<float>> params) { state.step(params); }

}  // namespace vfedssd
