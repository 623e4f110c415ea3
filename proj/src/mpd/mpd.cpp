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

#include "vfedssd/mpd/mpd.hpp"

#include <cmath>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"
#include "vfedssd/numeric/loss.hpp"

namespace vfedssd {

std::string_view permute_side_name(PermuteSide s) { return s == PermuteSide::A ? "A" : "B"; }

PermuteSide parse_permute_side(std::string_view name) {
  if (name == "A" || name == "a") return PermuteSide::A;
  if (name == "B" || name == "b") return PermuteSide::B;
  throw ValidationError("permute side must be A or B, got '" + std::string(name) + "'");
}

std::string_view negative_sampling_name(NegativeSampling s) {
  return s == NegativeSampling::Uniform ? "uniform" : "frequency";
}

NegativeSampling parse_negative_sampling(std::string_view name) {
  if (name == "uniform") return NegativeSampling::Uniform;
  if (name == "frequency") return NegativeSampling::Frequency;
  throw ValidationError("negative sampling must be uniform or frequency, got '" + std::string(name) + "'");
}

std::vector<DerangementPermutation> sample_negatives(const Matrix& permuted, std::size_t k, std::uint64_t seed,
                                                     NegativeSampling sampling) {
  if (k == 0) throw ValidationError("k must be at least 1");
  Rng rng(seed);
  std::vector<DerangementPermutation> out;
  out.reserve(k);
  if (sampling == NegativeSampling::Uniform) {
    for (std::size_t j = 0; j < k; ++j) out.push_back(sample_derangement(permuted.rows(), rng));
  } else {
    const EmpiricalUnigram u = EmpiricalUnigram::from_rows(permuted);
    std::vector<double> w(u.counts.begin(), u.counts.end());
    for (std::size_t j = 0; j < k; ++j) out.push_back(sample_weighted_derangement(w, rng));
  }
  return out;
}

MpdBatch build_mpd_batch(const Batch& batch, std::size_t k, std::uint64_t seed, PermuteSide side,
                         NegativeSampling sampling) {
  if (batch.rows() < 2) throw ValidationError("matched-pair batch needs at least 2 rows");
  MpdBatch out;
  out.positive = Batch{batch.x_a, batch.x_b, std::nullopt};
  const Matrix& permuted = side == PermuteSide::A ? batch.x_a : batch.x_b;
  out.permutations = sample_negatives(permuted, k, seed, sampling);
  for (const auto& p : out.permutations) {
    const std::span<const std::size_t> map(p.mapping);
    if (side == PermuteSide::A) {
      out.negatives.push_back(Batch{gather_rows(batch.x_a, map), batch.x_b, std::nullopt});
    } else {
      out.negatives.push_back(Batch{batch.x_a, gather_rows(batch.x_b, map), std::nullopt});
    }
  }
  return out;
}

namespace {

/// [rows of h selected by map] or h itself.
Matrix permuted_or_same(const Matrix& h, const DerangementPermutation* p) {
  return p ? gather_rows(h, std::span<const std::size_t>(p->mapping)) : h;
}

/// Sums the (k+1) blocks of an m-row gradient back onto the m source rows.
Matrix fold_blocks(const Matrix& d, std::size_t m, const std::vector<DerangementPermutation>& perms, bool permuted) {
  const std::size_t c = d.cols();
  std::vector<double> acc(m * c, 0.0);
  for (std::size_t b = 0; b <= perms.size(); ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t src = (b > 0 && permuted) ? perms[b - 1].mapping[i] : i;
      const float* g = d.row(b * m + i).data();
      double* a = acc.data() + src * c;
      for (std::size_t j = 0; j < c; ++j) a[j] += static_cast<double>(g[j]);
    }
  }
  Matrix out(m, c);
  for (std::size_t i = 0; i < acc.size(); ++i) out.values()[i] = static_cast<float>(acc[i]);
  return out;
}

}  // namespace

EpochStats mpd_epoch(ActiveParty& active, std::uint64_t seed, const MpdOptions& options) {
  if (options.k == 0) throw ValidationError("k must be at least 1");
  const Matrix& x = active.data().features.segment(Segment::Unlabeled);
  if (x.rows() < 2) throw DataError("matched-pair pre-training needs at least 2 unlabeled rows");
  const auto order = batch_indices(x.rows(), options.batch_size, seed, 2);
  active.begin_remote_epoch(Segment::Unlabeled, seed, options.batch_size, 2);

  EpochStats stats;
  stats.skipped_batches = (x.rows() % options.batch_size == 1) ? 1 : 0;
  const bool perm_a = options.permute == PermuteSide::A;
  const std::size_t da = active.d_a();
  double total = 0.0;
  double correct = 0.0;
  std::size_t positives = 0;
  std::size_t rows_seen = 0;

  for (std::size_t b = 0; b < order.size(); ++b) {
    const auto& idx = order[b];
    const std::size_t m = idx.size();
    const Matrix x_a = gather_rows(x, std::span<const std::size_t>(idx));
    const Matrix h_b = active.receive_activation(MessageType::Activation, m);
    const Matrix h_a = active.bottom().forward(x_a, true);

    const auto perms = sample_negatives(perm_a ? x_a : h_b, options.k, derive_seed(seed, "negatives" + std::to_string(b)),
                                        options.sampling);
    std::vector<Matrix> blocks;
    blocks.reserve(options.k + 1);
    blocks.push_back(concat_cols(h_a, h_b));
    for (const auto& p : perms) {
      blocks.push_back(perm_a ? concat_cols(permuted_or_same(h_a, &p), h_b) : concat_cols(h_a, permuted_or_same(h_b, &p)));
    }
    const Matrix logits = active.top().forward(stack_rows(std::span<const Matrix>(blocks)), true);
    const auto loss = mpd_loss(slice_rows(logits, 0, m), slice_rows(logits, m, logits.rows()));
    if (!std::isfinite(loss.value)) {
      active.abort_step();
      throw DivergenceError("matched-pair loss became non-finite at step " + std::to_string(b + 1));
    }
    const Matrix grads[2] = {loss.grad_pos, loss.grad_neg};
    const Matrix d = active.top().backward(stack_rows(std::span<const Matrix>(grads)));
    const Matrix dh_a = fold_blocks(slice_cols(d, 0, da), m, perms, perm_a);
    const Matrix dh_b = fold_blocks(slice_cols(d, da, d.cols()), m, perms, !perm_a);
    active.bottom().backward(dh_a);
    active.send_gradient(dh_b);
    active.update();

    total += loss.value * static_cast<double>(m);
    correct += loss.accuracy * static_cast<double>(m * (options.k + 1));
    positives += m;
    rows_seen += m * (options.k + 1);
    ++stats.steps;
  }
  stats.loss = positives == 0 ? 0.0 : total / static_cast<double>(positives);
  if (rows_seen > 0) stats.accuracy = correct / static_cast<double>(rows_seen);
  return stats;
}

FitResult pretrain(ActiveParty& active, const MpdOptions& options, std::size_t epochs, std::uint64_t seed,
                   const std::string& stage) {
  MpdLearner learner(active, options);
  FitOptions fo;
  fo.stage = stage;
  fo.max_epochs = epochs;
  fo.patience = 0;
  fo.seed = seed;
  return fit(learner, fo);
}

}  // namespace vfedssd
