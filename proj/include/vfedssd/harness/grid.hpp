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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/harness/experiment.hpp"

namespace vfedssd {

/// One grid dimension. Several keys may move together, e.g. a learning
/// rate and its fine-tune counterpart: values[i][j] is the value of keys[j]
/// at point i.
struct GridAxis {
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> values;
};

/// Text form, one axis per line:
///   train.lr|train.finetune_lr = 1e-2|1e-3, 5e-3|5e-4
///   train.l2 = 1e-4, 1e-5
/// Blank lines and lines starting with '#' are ignored.
struct GridSpec {
  std::vector<GridAxis> axes;

  static GridSpec parse(std::string_view text);
  /// Learning rates {1e-2, 5e-3} paired with fine-tune rates {1e-3, 5e-4},
  /// L2 in {1e-4, 1e-5} and alpha in {0.5, 0.9}.
  static GridSpec standard();
  std::size_t size() const;
  /// Key assignments of the point with the given per-axis indices.
  std::map<std::string, std::string> point(std::span<const std::size_t> index) const;
};

/// Whether changing a key can change a method's result.
bool key_affects(Method method, std::string_view key, const ExperimentConfig& config);

struct GridCandidate {
  std::map<std::string, std::string> point;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<double>> validation_auc;
  std::vector<std::optional<double>> test_auc;
  /// Median validation AUC over seeds; the selection criterion.
  std::optional<double> selection_score;
};

struct GridMethodResult {
  Method method = Method::VFL;
  std::vector<GridCandidate> candidates;
  std::optional<std::size_t> selected;
  /// Test AUC of the selected point's seed with the highest validation AUC.
  std::optional<double> best_test_auc;
  std::optional<double> median_test_auc;
  std::optional<double> improvement;
};

struct GridReport {
  std::vector<GridMethodResult> methods;
  std::size_t runs = 0;

  const GridMethodResult* find(Method m) const;
  std::string to_json() const;
};

/// Runs every grid point for every seed. A method only runs at points whose
/// axes it ignores sit at their first value, so each method sees exactly
/// the product of its relevant axes. Points are compared by the median
/// validation AUC over seeds; test AUC never enters the selection.
GridReport grid(const ExperimentConfig& base, const GridSpec& spec, std::span<const Method> methods,
                std::span<const std::uint64_t> seeds, RunOptions options = {});

}  // namespace vfedssd
