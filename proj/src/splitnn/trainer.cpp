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

#include "vfedssd/splitnn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"
#include "vfedssd/numeric/loss.hpp"

namespace vfedssd {

std::uint64_t epoch_seed(std::uint64_t stage_seed, std::size_t epoch) {
  return derive_seed(stage_seed, "epoch" + std::to_string(epoch));
}

FitResult fit(Learner& learner, const FitOptions& options) {
  FitResult r;
  r.history.stage = options.stage;
  bool has_snapshot = false;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t last_epoch = 0;
  for (std::size_t e = 1; e <= options.max_epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t m0 = learner.messages();
    const std::uint64_t b0 = learner.bytes();
    EpochStats stats;
    try {
      stats = learner.train_epoch(epoch_seed(options.seed, e));
    } catch (const NumericError& err) {
      if (has_snapshot) learner.restore();
      throw DivergenceError(options.stage + ": diverged in epoch " + std::to_string(e) + " (" + err.what() +
                            "); restored epoch " + std::to_string(r.best_epoch));
    }
    const std::optional<double> auc = learner.validate();
    EpochRecord rec;
    rec.epoch = e;
    rec.train_loss = stats.loss;
    rec.validation_auc = auc;
    rec.train_accuracy = stats.accuracy;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.messages = learner.messages() - m0;
    rec.bytes = learner.bytes() - b0;
    r.history.epochs.push_back(rec);
    last_epoch = e;
    if (options.on_epoch) options.on_epoch(rec);

    if (!auc) {
      learner.snapshot();
      has_snapshot = true;
      r.best_epoch = e;
      continue;
    }
    if (*auc > best) {
      best = *auc;
      learner.snapshot();
      has_snapshot = true;
      r.best_epoch = e;
    }
    if (early_stop(r.history, options.patience).stop) {
      r.stopped_early = e < options.max_epochs;
      break;
    }
  }
  if (has_snapshot && r.best_epoch != last_epoch) learner.restore();
  return r;
}

std::vector<float> predict_local(LocalModel<float>& model, const Matrix& x, std::size_t batch_size) {
  std::vector<float> out;
  out.reserve(x.rows());
  for (const auto& idx : batch_indices(x.rows(), batch_size, std::nullopt, 1)) {
    const Matrix logits = model.forward(gather_rows(x, std::span<const std::size_t>(idx)));
    out.insert(out.end(), logits.values().begin(), logits.values().end());
  }
  return out;
}

LocalLearner::LocalLearner(LocalModel<float>& model, Data data, const AdamConfig& optim, std::size_t batch_size)
    : model_(model), data_(data), adam_(optim), batch_size_(batch_size) {
  if (data_.train_x == nullptr) throw ValidationError("local learner without training rows");
  if (data_.train_targets.size() != data_.train_x->rows()) throw DimensionError("one target per training row required");
  if (!data_.train_soft.empty() && data_.train_soft.size() != data_.train_x->rows()) {
    throw DataError("soft labels cover " + std::to_string(data_.train_soft.size()) + " of " +
                    std::to_string(data_.train_x->rows()) + " training rows");
  }
}

EpochStats LocalLearner::train_epoch(std::uint64_t seed) {
  const Matrix& x = *data_.train_x;
  EpochStats stats;
  double total = 0.0;
  std::vector<float> hard;
  std::vector<float> soft;
  for (const auto& idx : batch_indices(x.rows(), batch_size_, seed, 1)) {
    const Matrix logits = model_.forward(gather_rows(x, std::span<const std::size_t>(idx)), true);
    hard.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) hard[i] = data_.train_targets[idx[i]];
    LossResult<float> loss;
    if (data_.train_soft.empty()) {
      loss = bce_loss(logits, Matrix::column(hard));
    } else {
      soft.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) soft[i] = data_.train_soft[idx[i]];
      loss = distill_loss(logits, hard, soft, data_.alpha);
    }
    if (!std::isfinite(loss.value)) {
      model_.bottom().clear_record();
      model_.top().clear_record();
      throw DivergenceError("loss became non-finite at step " + std::to_string(stats.steps + 1));
    }
    model_.backward(loss.grad);
    adam_.step(model_.params());
    total += loss.value * static_cast<double>(idx.size());
    ++stats.steps;
  }
  stats.loss = x.rows() == 0 ? 0.0 : total / static_cast<double>(x.rows());
  return stats;
}

std::optional<double> LocalLearner::validate() {
  if (data_.validation_x == nullptr || data_.validation_x->rows() == 0) return std::nullopt;
  const auto logits = predict_local(model_, *data_.validation_x, batch_size_);
  return auc<float, float>(logits, data_.validation_y).auc;
}

void LocalLearner::snapshot() { snapshot_ = snapshot_values(model_.params()); }

void LocalLearner::restore() {
  if (!snapshot_) throw StateError("restore without a snapshot");
  restore_values(model_.params(), *snapshot_);
}

FederatedLearner::FederatedLearner(ActiveParty& active, Segment segment, std::span<const float> targets,
                                   std::size_t batch_size, std::size_t eval_batch_size)
    : active_(active), segment_(segment), targets_(targets), batch_size_(batch_size), eval_batch_size_(eval_batch_size) {}

EpochStats FederatedLearner::train_epoch(std::uint64_t seed) {
  return active_.train_epoch(segment_, targets_, seed, batch_size_);
}

std::optional<double> FederatedLearner::validate() {
  if (active_.data().features.rows(Segment::Validation) == 0) return std::nullopt;
  return federated_auc(active_, Segment::Validation, eval_batch_size_);
}

double federated_auc(ActiveParty& active, Segment segment, std::size_t batch_size) {
  const auto logits = active.predict(segment, batch_size);
  return auc<float, float>(logits, active.read_labels(segment)).auc;
}

}  // namespace vfedssd
