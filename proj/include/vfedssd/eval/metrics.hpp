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
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

/// Area under the ROC curve; ties between a positive and a negative score
/// count one half.
struct AucResult {
  double auc = 0.5;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Rank-sum (Mann-Whitney U) AUC in O(n log n). Labels must be 0 or 1 and
/// both classes must be present.
template <class Score, class Label>
AucResult auc(std::span<const Score> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  AucResult r;
  for (Label y : labels) {
    if (y == Label{1}) {
      ++r.n_pos;
    } else if (y == Label{0}) {
      ++r.n_neg;
    } else {
      throw ValidationError("auc: labels must be 0 or 1");
    }
  }
  if (r.n_pos == 0 || r.n_neg == 0) throw MetricUndefinedError("auc undefined with a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum, with tied groups sharing their mean rank.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t twice_rank = i + 1 + j;  // 2 * mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == Label{1}) twice_rank_sum += twice_rank;
    }
    i = j;
  }
  const std::uint64_t np = r.n_pos;
  const std::uint64_t twice_u = twice_rank_sum - np * (np + 1);
  r.auc = static_cast<double>(twice_u) / (2.0 * static_cast<double>(r.n_pos) * static_cast<double>(r.n_neg));
  return r;
}

inline AucResult auc(const std::vector<float>& scores, const std::vector<float>& labels) {
  return auc<float, float>(scores, labels);
}

/// Pearson correlation of two equally long samples. Throws
/// MetricUndefinedError if either sample has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// One evaluation of a training stage.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> validation_auc;
  /// Stage-specific auxiliary metric (matched-pair accuracy for pre-training).
  std::optional<double> train_accuracy;
  double wall_seconds = 0.0;
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
};

struct MetricHistory {
  std::string stage;
  std::vector<EpochRecord> epochs;

  /// 1-based epoch of the highest validation AUC (first on ties).
  std::optional<std::size_t> best_epoch() const;
  std::optional<double> best_auc() const;

  /// One JSON object per epoch, newline separated.
  std::string to_jsonl() const;
  static MetricHistory from_jsonl(const std::string& text);
};

/// Minimum validation-AUC gain that resets the patience counter.
inline constexpr double kEarlyStopMinDelta = 1e-5;

struct EarlyStopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;
};

/// Stops once `patience` consecutive evaluations (at least one) failed to
/// improve the best validation AUC by more than kEarlyStopMinDelta.
EarlyStopDecision early_stop(const MetricHistory& history, std::size_t patience);

/// First 1-based epoch whose validation AUC reaches target.
std::optional<std::size_t> epochs_to_auc(const MetricHistory& history, double target);

}  // namespace vfedssd
