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
#include <span>
#include <string>

#include "vfedssd/common/error.hpp"
#include "vfedssd/numeric/matrix.hpp"

namespace vfedssd {

/// Clamp applied to every probability that enters a log or a KL term.
inline constexpr double kProbEpsilon = 1e-7;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without forming sigmoid(x).
inline double log_sigmoid(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

inline double clamp_probability(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

template <class T>
BasicMatrix<T> log_sigmoid(const BasicMatrix<T>& x) {
  BasicMatrix<T> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.values()[i] = static_cast<T>(log_sigmoid(static_cast<double>(x.values()[i])));
  }
  return out;
}

/// Scalar loss and its gradient with respect to the logits.
template <class T>
struct LossResult {
  double value = 0.0;
  BasicMatrix<T> grad;
};

/// Per-row binary cross-entropy with logits: softplus(z) - y z.
inline double bce_term(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

/// Mean binary cross-entropy over rows. Labels may be soft (any value in
/// [0, 1]).
template <class T>
LossResult<T> bce_loss(const BasicMatrix<T>& logits, const BasicMatrix<T>& labels) {
  if (!logits.same_shape(labels)) {
    throw DimensionError("bce_loss shapes differ: " + shape_string(logits) + " vs " + shape_string(labels));
  }
  if (logits.empty()) throw ValidationError("bce_loss on an empty batch");
  const double m = static_cast<double>(logits.rows());
  LossResult<T> r{0.0, BasicMatrix<T>(logits.rows(), logits.cols())};
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double y = static_cast<double>(labels.values()[i]);
    if (!(y >= 0.0 && y <= 1.0)) {
      throw ValidationError("label " + std::to_string(y) + " at row " + std::to_string(i) +
                            " outside [0, 1]");
    }
    const double z = static_cast<double>(logits.values()[i]);
    total += bce_term(z, y);
    r.grad.values()[i] = static_cast<T>((sigmoid(z) - y) / m);
  }
  r.value = total / m;
  return r;
}

struct KlResult {
  double value = 0.0;
  /// d KL / d (student logit); the teacher is a constant.
  double grad_logit = 0.0;
};

/// KL(p || q) between Bernoulli(p_teacher) and Bernoulli(p_student), both
/// clamped to [eps, 1 - eps].
inline KlResult bernoulli_kl(double p_teacher, double p_student) {
  const double p = clamp_probability(p_teacher);
  const double q = clamp_probability(p_student);
  KlResult r;
  r.value = p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  r.grad_logit = q - p;
  return r;
}

/// Matched-pair detection loss. logits_neg holds k blocks of m rows (one per
/// negative batch). Both sums are divided by the positive batch size m, so
/// each positive row is weighed against k negatives.
template <class T>
struct MpdLossResult {
  double value = 0.0;
  BasicMatrix<T> grad_pos;
  BasicMatrix<T> grad_neg;
  /// Fraction of rows classified correctly (positive logit > 0, negative < 0).
  double accuracy = 0.0;
};

template <class T>
MpdLossResult<T> mpd_loss(const BasicMatrix<T>& logits_pos, const BasicMatrix<T>& logits_neg) {
  if (logits_pos.cols() != 1 || logits_neg.cols() != 1) throw DimensionError("mpd_loss expects column logits");
  if (logits_pos.rows() == 0) throw ValidationError("mpd_loss on an empty batch");
  if (logits_neg.rows() % logits_pos.rows() != 0) {
    throw DimensionError("negative logits must be k blocks of the positive batch size");
  }
  const double m = static_cast<double>(logits_pos.rows());
  MpdLossResult<T> r;
  r.grad_pos = BasicMatrix<T>(logits_pos.rows(), 1);
  r.grad_neg = BasicMatrix<T>(logits_neg.rows(), 1);
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits_pos.rows(); ++i) {
    const double z = static_cast<double>(logits_pos(i, 0));
    total += log_sigmoid(z);
    r.grad_pos(i, 0) = static_cast<T>((sigmoid(z) - 1.0) / m);
    correct += z > 0.0;
  }
  for (std::size_t i = 0; i < logits_neg.rows(); ++i) {
    const double z = static_cast<double>(logits_neg(i, 0));
    total += log_sigmoid(-z);
    r.grad_neg(i, 0) = static_cast<T>(sigmoid(z) / m);
    correct += z < 0.0;
  }
  r.value = -total / m;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(logits_pos.rows() + logits_neg.rows());
  return r;
}

/// alpha * BCE(y, student) + (1 - alpha) * KL(teacher || student), both
/// averaged over the batch. soft holds clamped teacher probabilities.
template <class T>
LossResult<T> distill_loss(const BasicMatrix<T>& logits, std::span<const float> hard,
                           std::span<const float> soft, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha outside [0, 1]");
  if (logits.cols() != 1 || hard.size() != logits.rows() || soft.size() != logits.rows()) {
    throw DimensionError("distill_loss expects one hard and one soft label per logit row");
  }
  if (logits.empty()) throw ValidationError("distill_loss on an empty batch");
  const double m = static_cast<double>(logits.rows());
  LossResult<T> r{0.0, BasicMatrix<T>(logits.rows(), 1)};
  double ce = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double z = static_cast<double>(logits(i, 0));
    const double y = static_cast<double>(hard[i]);
    if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("hard label outside [0, 1] at row " + std::to_string(i));
    const double q = sigmoid(z);
    ce += bce_term(z, y);
    // The student probability is stored at working precision, as the
    // teacher's soft labels are, so identical logits give a KL of exactly 0.
    const double q_kl = static_cast<double>(static_cast<T>(clamp_probability(q)));
    const KlResult k = bernoulli_kl(static_cast<double>(soft[i]), q_kl);
    kl += k.value;
    const double g_ce = (q - y) / m;
    const double g_kl = (q_kl - clamp_probability(static_cast<double>(soft[i]))) / m;
    r.grad(i, 0) = static_cast<T>(alpha * g_ce + (1.0 - alpha) * g_kl);
  }
  r.value = alpha * (ce / m) + (1.0 - alpha) * (kl / m);
  return r;
}

}  // namespace vfedssd
