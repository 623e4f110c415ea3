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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/rng.hpp"
#include "vfedssd/eval/metrics.hpp"

namespace vfedssd {
namespace {

double brute_force_auc(const std::vector<float>& s, const std::vector<float>& y) {
  double credit = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0f) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0f) continue;
      pairs += 1.0;
      credit += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return credit / pairs;
}

MetricHistory history(std::initializer_list<double> aucs) {
  MetricHistory h;
  h.stage = "test";
  std::size_t e = 0;
  for (double a : aucs) {
    EpochRecord r;
    r.epoch = ++e;
    r.validation_auc = a;
    h.epochs.push_back(r);
  }
  return h;
}

TEST(Auc, PerfectSeparation) { EXPECT_EQ(auc({0.9f, 0.8f, 0.3f, 0.2f}, {1, 1, 0, 0}).auc, 1.0); }

TEST(Auc, ThreeOfFourPairsConcordant) { EXPECT_EQ(auc({0.9f, 0.8f, 0.3f, 0.2f}, {1, 0, 1, 0}).auc, 0.75); }

TEST(Auc, AllTiedIsOneHalf) { EXPECT_EQ(auc({0.4f, 0.4f, 0.4f, 0.4f, 0.4f}, {1, 0, 1, 0, 0}).auc, 0.5); }

TEST(Auc, ReversedIsZero) { EXPECT_EQ(auc({0.1f, 0.2f, 0.8f}, {1, 1, 0}).auc, 0.0); }

TEST(Auc, CountsClasses) {
  const auto r = auc({0.1f, 0.2f, 0.8f, 0.3f}, {1, 1, 0, 1});
  EXPECT_EQ(r.n_pos, 3u);
  EXPECT_EQ(r.n_neg, 1u);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc({0.1f, 0.2f}, {1, 1}), MetricUndefinedError);
  EXPECT_THROW(auc({0.1f, 0.2f}, {0, 0}), MetricUndefinedError);
}

TEST(Auc, RejectsNonBinaryLabelsAndLengthMismatch) {
  EXPECT_THROW(auc({0.1f, 0.2f}, {1, 0.5f}), ValidationError);
  EXPECT_THROW(auc({0.1f, 0.2f}, {1}), DimensionError);
}

TEST(Auc, MatchesPairCountingOracleWithTies) {
  Rng rng(2024);
  for (int c = 0; c < 300; ++c) {
    const std::size_t n = 2 + rng.below(200);
    const std::uint64_t levels = 1 + rng.below(c % 3 == 0 ? 4 : 1000);
    std::vector<float> s(n);
    std::vector<float> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<float>(rng.below(levels));
      y[i] = static_cast<float>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    ASSERT_EQ(auc(s, y).auc, brute_force_auc(s, y)) << "case " << c;
  }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  Rng rng(7);
  std::vector<float> s(500);
  std::vector<float> y(500);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = static_cast<float>(rng.uniform(-3.0, 3.0));
    y[i] = static_cast<float>(rng.below(2));
  }
  std::vector<float> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = static_cast<float>(1.0 / (1.0 + std::exp(-2.0 * s[i])));
  EXPECT_EQ(auc(s, y).auc, auc(t, y).auc);
}

TEST(Auc, DoubleScores) {
  const std::vector<double> s{0.3, 0.1, 0.2};
  const std::vector<int> y{1, 0, 0};
  EXPECT_EQ((auc<double, int>(s, y).auc), 1.0);
}

TEST(Pearson, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 4, 6, 8};
  const std::vector<double> z{8, 6, 4, 2};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-12);
  const std::vector<double> flat{1, 1, 1, 1};
  EXPECT_THROW(pearson(x, flat), MetricUndefinedError);
}

TEST(EarlyStop, PlateauStopsAfterPatience) {
  const auto h = history({0.70, 0.71, 0.705, 0.705, 0.705});
  const auto d = early_stop(h, 3);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(d.best_epoch, 2u);
  auto partial = h;
  partial.epochs.pop_back();
  EXPECT_FALSE(early_stop(partial, 3).stop);
}

TEST(EarlyStop, MonotoneImprovementNeverStops) {
  const auto h = history({0.6, 0.61, 0.62, 0.63, 0.64, 0.65, 0.66});
  const auto d = early_stop(h, 1);
  EXPECT_FALSE(d.stop);
  EXPECT_EQ(d.best_epoch, 7u);
}

TEST(EarlyStop, PatienceZeroStopsAtFirstNonImprovement) {
  EXPECT_FALSE(early_stop(history({0.6, 0.7}), 0).stop);
  EXPECT_TRUE(early_stop(history({0.6, 0.7, 0.69}), 0).stop);
}

TEST(EarlyStop, TinyGainsDoNotResetPatience) {
  // The best checkpoint is still the highest AUC seen.
  const auto d = early_stop(history({0.7, 0.700005, 0.700009, 0.700010}), 3);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(d.best_epoch, 4u);
}

TEST(History, BestEpochIsFirstMaximum) {
  const auto h = history({0.6, 0.8, 0.7, 0.8});
  EXPECT_EQ(h.best_epoch(), 2u);
  EXPECT_EQ(h.best_auc(), 0.8);
  EXPECT_FALSE(MetricHistory{}.best_epoch().has_value());
}

TEST(History, EpochsToAuc) {
  const auto h = history({0.6, 0.65, 0.72, 0.70});
  EXPECT_EQ(epochs_to_auc(h, 0.5), 1u);
  EXPECT_EQ(epochs_to_auc(h, 0.7), 3u);
  EXPECT_EQ(epochs_to_auc(h, 0.72), 3u);
  EXPECT_FALSE(epochs_to_auc(h, 0.9).has_value());
}

TEST(History, JsonlRoundTrip) {
  MetricHistory h = history({0.61, 0.625});
  h.epochs[0].train_loss = 0.69314718055994529;
  h.epochs[1].train_accuracy = 0.75;
  h.epochs[1].messages = 1234;
  h.epochs[1].bytes = 99999;
  h.epochs[1].wall_seconds = 1.5;
  const std::string text = h.to_jsonl();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const MetricHistory back = MetricHistory::from_jsonl(text);
  ASSERT_EQ(back.epochs.size(), 2u);
  EXPECT_EQ(back.stage, "test");
  EXPECT_EQ(back.epochs[0].train_loss, h.epochs[0].train_loss);
  EXPECT_EQ(back.epochs[1].validation_auc, 0.625);
  EXPECT_EQ(back.epochs[1].train_accuracy, 0.75);
  EXPECT_EQ(back.epochs[1].messages, 1234u);
  EXPECT_FALSE(back.epochs[0].train_accuracy.has_value());
}

}  // namespace
}  // namespace vfedssd
