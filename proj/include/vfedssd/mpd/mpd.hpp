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
#include <string_view>
#include <vector>

#include "vfedssd/data/dataset.hpp"
#include "vfedssd/mpd/derangement.hpp"
#include "vfedssd/splitnn/party.hpp"
#include "vfedssd/splitnn/trainer.hpp"

namespace vfedssd {

/// Which party's half is permuted to form negatives.
enum class PermuteSide : std::uint8_t { A, B };
enum class NegativeSampling : std::uint8_t { Uniform, Frequency };

std::string_view permute_side_name(PermuteSide s);
PermuteSide parse_permute_side(std::string_view name);
std::string_view negative_sampling_name(NegativeSampling s);
NegativeSampling parse_negative_sampling(std::string_view name);

struct MpdOptions {
  std::size_t k = 1;
  PermuteSide permute = PermuteSide::A;
  NegativeSampling sampling = NegativeSampling::Uniform;
  std::size_t batch_size = 512;
};

/// Positive pairs [X_A; X_B] and k negative batches with one side permuted
/// by an independent derangement. Negatives reuse the positive batch's
/// unpermuted rows.
struct MpdBatch {
  Batch positive;
  std::vector<Batch> negatives;
  std::vector<DerangementPermutation> permutations;

  std::size_t k() const { return negatives.size(); }
};

/// Throws ValidationError for a batch of fewer than two rows or k = 0.
MpdBatch build_mpd_batch(const Batch& batch, std::size_t k, std::uint64_t seed, PermuteSide side = PermuteSide::A,
                         NegativeSampling sampling = NegativeSampling::Uniform);

/// The k derangements for one batch. With frequency sampling the weights
/// are the in-batch counts of the rows of `permuted`.
std::vector<DerangementPermutation> sample_negatives(const Matrix& permuted, std::size_t k, std::uint64_t seed,
                                                     NegativeSampling sampling);

/// One matched-pair pass over the unlabeled segment, driven by the active
/// party. Each step exchanges one Activation (h_B of the positive rows) and
/// one Gradient; the negatives are formed on the active side by permuting
/// rows of h_A or h_B. A trailing batch of one row is skipped and counted.
/// Never reads labels.
EpochStats mpd_epoch(ActiveParty& active, std::uint64_t seed, const MpdOptions& options);

/// Learner for MPD pre-training: no validation metric, so every epoch runs.
class MpdLearner : public Learner {
 public:
  MpdLearner(ActiveParty& active, MpdOptions options) : active_(active), options_(options) {}

  EpochStats train_epoch(std::uint64_t epoch_seed) override { return mpd_epoch(active_, epoch_seed, options_); }
  std::optional<double> validate() override { return std::nullopt; }
  void snapshot() override { active_.snapshot(); }
  void restore() override { active_.restore(); }
  std::uint64_t messages() const override { return active_.channel().stats().messages(); }
  std::uint64_t bytes() const override { return active_.channel().stats().bytes(); }

 private:
  ActiveParty& active_;
  MpdOptions options_;
};

/// Runs MPD pre-training for a fixed number of epochs from the current
/// initialization. The caller keeps the bottoms and discards the top.
FitResult pretrain(ActiveParty& active, const MpdOptions& options, std::size_t epochs, std::uint64_t seed,
                   const std::string& stage = "mpd-pretrain");

}  // namespace vfedssd
