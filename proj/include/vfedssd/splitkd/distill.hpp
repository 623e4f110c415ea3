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
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "vfedssd/data/dataset.hpp"
#include "vfedssd/numeric/adam.hpp"
#include "vfedssd/numeric/loss.hpp"
#include "vfedssd/splitnn/party.hpp"
#include "vfedssd/splitnn/trainer.hpp"

namespace vfedssd {

/// Teacher probabilities for every row of one segment, clamped to
/// [eps, 1 - eps]. Sidecar file layout (little-endian): "VFSL" |
/// version u32 | rows u64 | teacher_hash u64 | rows x f32.
struct SoftLabelCache {
  std::vector<float> probabilities;
  std::uint64_t teacher_hash = 0;

  std::size_t size() const { return probabilities.size(); }
  void save(const std::filesystem::path& path) const;
  static SoftLabelCache load(const std::filesystem::path& path);
};

/// Clamped sigmoid of a logit, as stored in a cache.
float soft_label(float logit);

/// Runs the frozen split model over a segment (one EvalActivation per
/// batch) and caches its probabilities. Never computes gradients.
SoftLabelCache teacher_predict(ActiveParty& teacher, Segment segment, std::size_t batch_size,
                               std::uint64_t teacher_hash);

/// Throws ConfigError unless the student's bottom reads exactly the
/// teacher's party-A features.
void check_student_schema(const PartySchema& teacher_a, const LocalModel<float>& student);

/// One update of the student on a batch with hard labels y and teacher
/// probabilities soft: alpha * BCE + (1 - alpha) * KL(soft || student).
/// Throws DataError naming the first row without a usable soft label.
double distill_step(LocalModel<float>& student, AdamState& adam, const Matrix& x, std::span<const float> hard,
                    std::span<const float> soft, double alpha);

enum class StudentInit : std::uint8_t { Random, PretrainedBottom };

std::string_view student_init_name(StudentInit s);
StudentInit parse_student_init(std::string_view name);

/// Trains a single-party student on the training segment against hard
/// labels and cached teacher probabilities, with early stopping on
/// validation AUC.
FitResult distill(LocalModel<float>& student, const ActiveData& data, const SoftLabelCache& train_soft, double alpha,
                  const AdamConfig& optim, std::size_t batch_size, const FitOptions& options);

}  // namespace vfedssd
