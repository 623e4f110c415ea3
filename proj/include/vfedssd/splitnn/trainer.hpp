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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vfedssd/eval/metrics.hpp"
#include "vfedssd/numeric/adam.hpp"
#include "vfedssd/splitnn/model.hpp"
#include "vfedssd/splitnn/party.hpp"

namespace vfedssd {

/// A model plus the data it is trained on, as seen by the epoch loop.
class Learner {
 public:
  virtual ~Learner() = default;

  /// One pass over the training rows in an order derived from epoch_seed.
  /// Throws DivergenceError on a non-finite loss.
  virtual EpochStats train_epoch(std::uint64_t epoch_seed) = 0;
  /// Validation AUC, or nullopt for objectives without labels.
  virtual std::optional<double> validate() = 0;
  virtual void snapshot() = 0;
  virtual void restore() = 0;
  /// Cumulative protocol traffic caused by this learner's party.
  virtual std::uint64_t messages() const { return 0; }
  virtual std::uint64_t bytes() const { return 0; }
};

struct FitOptions {
  std::string stage;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  /// Called after each completed epoch with its record.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  MetricHistory history;
  /// Epoch whose parameters the learner holds on return (0 = initial).
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Epoch loop with per-epoch validation and early stopping. The learner is
/// left holding the parameters of the best validation epoch. Without
/// validation, all epochs run and the last one is kept. On divergence the
/// last good parameters are restored and DivergenceError is rethrown.
FitResult fit(Learner& learner, const FitOptions& options);

/// Seed of epoch e (1-based) of a stage.
std::uint64_t epoch_seed(std::uint64_t stage_seed, std::size_t epoch);

/// Logits of a local model over all rows of x, in batches.
std::vector<float> predict_local(LocalModel<float>& model, const Matrix& x, std::size_t batch_size);

/// Trains a single-party model. With soft labels the objective is the
/// distillation loss alpha * BCE(y) + (1 - alpha) * KL(soft || model);
/// otherwise plain BCE against targets (hard or soft).
class LocalLearner : public Learner {
 public:
  struct Data {
    const Matrix* train_x = nullptr;
    std::span<const float> train_targets;
    std::span<const float> train_soft;  // empty: plain BCE
    double alpha = 1.0;
    const Matrix* validation_x = nullptr;
    std::span<const float> validation_y;
  };

  LocalLearner(LocalModel<float>& model, Data data, const AdamConfig& optim, std::size_t batch_size);

  EpochStats train_epoch(std::uint64_t epoch_seed) override;
  std::optional<double> validate() override;
  void snapshot() override;
  void restore() override;

 private:
  LocalModel<float>& model_;
  Data data_;
  AdamState adam_;
  std::size_t batch_size_;
  std::optional<std::vector<Matrix>> snapshot_;
};

/// Trains the split model through the active party; the passive party is
/// driven over the channel.
class FederatedLearner : public Learner {
 public:
  FederatedLearner(ActiveParty& active, Segment segment, std::span<const float> targets, std::size_t batch_size,
                   std::size_t eval_batch_size);

  EpochStats train_epoch(std::uint64_t epoch_seed) override;
  std::optional<double> validate() override;
  void snapshot() override { active_.snapshot(); }
  void restore() override { active_.restore(); }
  std::uint64_t messages() const override { return active_.channel().stats().messages(); }
  std::uint64_t bytes() const override { return active_.channel().stats().bytes(); }

 private:
  ActiveParty& active_;
  Segment segment_;
  std::span<const float> targets_;
  std::size_t batch_size_;
  std::size_t eval_batch_size_;
};

/// AUC of the active party's split model on a labeled segment.
double federated_auc(ActiveParty& active, Segment segment, std::size_t batch_size);

}  // namespace vfedssd
