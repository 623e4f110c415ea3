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

#include <cmath>
#include <limits>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "vfedssd/numeric/adam.hpp"
#include "vfedssd/numeric/layers.hpp"
#include "vfedssd/numeric/loss.hpp"

namespace vfedssd {
namespace {

using testing::check_local_bce;
using testing::check_loss_logits;

DenseLayer<float> identity_layer(Activation act) {
  DenseLayer<float> l(2, 2, act);
  l.weight() = Matrix::from_rows({{1, 0}, {0, 1}});
  return l;
}

TEST(Dense, IdentityWeightsPassInputThrough) {
  auto l = identity_layer(Activation::Identity);
  EXPECT_TRUE(bit_equal(l.forward(Matrix::from_rows({{1, 2}})), Matrix::from_rows({{1, 2}})));
}

TEST(Dense, ReluClampsNegatives) {
  auto l = identity_layer(Activation::ReLU);
  EXPECT_TRUE(bit_equal(l.forward(Matrix::from_rows({{-1, 2}})), Matrix::from_rows({{0, 2}})));
}

TEST(Dense, HandMultiply) {
  DenseLayer<float> l(2, 1, Activation::Identity);
  l.weight() = Matrix::from_rows({{1}, {1}});
  l.bias() = Matrix::from_rows({{0.5f}});
  const Matrix y = l.forward(Matrix::from_rows({{1, 2}}));
  EXPECT_EQ(y(0, 0), 3.5f);
}

TEST(Dense, ShapeMismatchThrows) {
  DenseLayer<float> l(3, 1, Activation::Identity);
  EXPECT_THROW(l.forward(Matrix(2, 2)), DimensionError);
}

TEST(Dense, BackwardWithoutForwardIsStateError) {
  DenseLayer<float> l(2, 2, Activation::Identity);
  EXPECT_THROW(l.backward(Matrix(1, 2)), StateError);
}

TEST(Dense, IdentityBackwardIsWeightTransposeTimesOnes) {
  DenseLayer<float> l(2, 3, Activation::Identity);
  l.weight() = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  l.forward(Matrix::from_rows({{0.5f, -1.0f}}), true);
  const Matrix dx = l.backward(Matrix(1, 3, 1.0f));
  EXPECT_EQ(dx(0, 0), 6.0f);
  EXPECT_EQ(dx(0, 1), 15.0f);
}

TEST(Dense, DeadReluPassesNoGradient) {
  auto l = identity_layer(Activation::ReLU);
  l.forward(Matrix::from_rows({{-1, 2}}), true);
  const Matrix dx = l.backward(Matrix(1, 2, 1.0f));
  EXPECT_EQ(dx(0, 0), 0.0f);
  EXPECT_EQ(dx(0, 1), 1.0f);
  EXPECT_EQ(l.grad_weight()(0, 0), 0.0f);
}

TEST(Dense, GlorotInitIsBounded) {
  DenseLayer<float> l(30, 10, Activation::ReLU);
  Rng rng(3);
  l.init_glorot(rng);
  const double limit = std::sqrt(6.0 / 40.0);
  for (float w : l.weight().values()) EXPECT_LE(std::abs(w), limit);
  for (float b : l.bias().values()) EXPECT_EQ(b, 0.0f);
}

TEST(Embedding, OutOfRangeIndexThrows) {
  EmbeddingTable<float> e(4, 2);
  const std::vector<std::size_t> idx{4};
  EXPECT_THROW(e.forward(idx), DimensionError);
}

TEST(Embedding, ScatterAddsRepeatedRows) {
  EmbeddingTable<float> e(4, 2);
  const std::vector<std::size_t> idx{1, 3, 1};
  e.forward(idx, true);
  e.backward(Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(e.grad()(1, 0), 6.0f);
  EXPECT_EQ(e.grad()(1, 1), 8.0f);
  EXPECT_EQ(e.grad()(3, 1), 4.0f);
  EXPECT_EQ(e.grad()(0, 0), 0.0f);
  EXPECT_EQ(e.touched_rows(), (std::vector<std::size_t>{1, 3}));
}

TEST(Adam, FirstStepClosedForm) {
  Matrix w(1, 1, 0.0f);
  Matrix g(1, 1, 1.0f);
  AdamState s(AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  std::vector<ParamRef<float>> p{{"w", &w, &g, Decay::All}};
  s.step(p);
  EXPECT_NEAR(w(0, 0), -0.1f, 1e-6);
}

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  Matrix w(1, 1, 0.7f);
  Matrix g(1, 1, 0.0f);
  AdamState s(AdamConfig{0.1});
  std::vector<ParamRef<float>> p{{"w", &w, &g, Decay::All}};
  s.step(p);
  EXPECT_EQ(w(0, 0), 0.7f);
}

TEST(Adam, L2AloneShrinksPositiveWeight) {
  Matrix w(1, 1, 0.7f);
  Matrix g(1, 1, 0.0f);
  AdamState s(AdamConfig{0.01, 0.9, 0.999, 1e-8, 1e-2});
  std::vector<ParamRef<float>> p{{"w", &w, &g, Decay::All}};
  s.step(p);
  EXPECT_LT(w(0, 0), 0.7f);
}

TEST(Adam, BiasesAndUntouchedEmbeddingRowsAreNotDecayed) {
  Matrix b(1, 1, 0.7f);
  Matrix gb(1, 1, 0.0f);
  Matrix e(2, 1, 0.7f);
  Matrix ge(2, 1, 0.0f);
  std::vector<std::size_t> touched{1};
  AdamState s(AdamConfig{0.01, 0.9, 0.999, 1e-8, 1e-2});
  std::vector<ParamRef<float>> p{{"b", &b, &gb, Decay::None}, {"e", &e, &ge, Decay::TouchedRows, &touched}};
  s.step(p);
  EXPECT_EQ(b(0, 0), 0.7f);
  EXPECT_EQ(e(0, 0), 0.7f);
  EXPECT_LT(e(1, 0), 0.7f);
}

TEST(Adam, NonFiniteGradientNamesParameterAndChangesNothing) {
  Matrix w(1, 2, 1.0f);
  Matrix g(1, 2, 0.5f);
  Matrix v(1, 1, 1.0f);
  Matrix gv(1, 1, std::numeric_limits<float>::quiet_NaN());
  AdamState s(AdamConfig{0.1});
  std::vector<ParamRef<float>> p{{"w", &w, &g, Decay::All}, {"top.bias", &v, &gv}};
  try {
    s.step(p);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("top.bias"), std::string::npos);
  }
  EXPECT_EQ(w(0, 0), 1.0f);
  EXPECT_EQ(s.steps(), 0u);
}

TEST(Adam, IdenticalInputsAreBitReproducible) {
  auto run = [] {
    Rng rng(11);
    Matrix w(4, 3);
    Matrix g(4, 3);
    AdamState s(AdamConfig{1e-2, 0.9, 0.999, 1e-8, 1e-4});
    std::vector<ParamRef<float>> p{{"w", &w, &g, Decay::All}};
    for (int step = 0; step < 20; ++step) {
      for (float& x : g.values()) x = static_cast<float>(rng.normal());
      s.step(p);
    }
    return w;
  };
  EXPECT_TRUE(bit_equal(run(), run()));
}

TEST(LogSigmoid, Values) {
  EXPECT_NEAR(log_sigmoid(0.0), -std::log(2.0), 1e-12);
  EXPECT_NEAR(log_sigmoid(50.0), 0.0, 1e-12);
  EXPECT_NEAR(log_sigmoid(-50.0), -50.0, 1e-12);
  const Matrix m = log_sigmoid(Matrix::from_rows({{0.0f, 50.0f, -50.0f}}));
  EXPECT_TRUE(m.all_finite());
}

TEST(LogSigmoid, FiniteOverWideRange) {
  for (double x = -1e4; x <= 1e4; x += 37.5) {
    EXPECT_TRUE(std::isfinite(log_sigmoid(x))) << x;
    EXPECT_TRUE(std::isfinite(bce_term(x, 1.0))) << x;
    EXPECT_TRUE(std::isfinite(bce_term(x, 0.0))) << x;
  }
}

TEST(Bce, Examples) {
  EXPECT_NEAR(bce_loss(Matrix::from_rows({{0}}), Matrix::from_rows({{1}})).value, std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(Matrix::from_rows({{50}}), Matrix::from_rows({{1}})).value, 0.0, 1e-12);
  EXPECT_NEAR(bce_loss(Matrix::from_rows({{0}, {0}}), Matrix::from_rows({{1}, {0}})).value, std::log(2.0), 1e-12);
}

TEST(Bce, RejectsLabelOutsideUnitInterval) {
  EXPECT_THROW(bce_loss(Matrix::from_rows({{0}}), Matrix::from_rows({{1.5f}})), ValidationError);
  EXPECT_THROW(bce_loss(Matrix::from_rows({{0}}), Matrix::from_rows({{-0.1f}})), ValidationError);
}

TEST(Bce, AcceptsSoftLabels) {
  EXPECT_NO_THROW(bce_loss(Matrix::from_rows({{0.3f}}), Matrix::from_rows({{0.25f}})));
}

TEST(Kl, Examples) {
  EXPECT_EQ(bernoulli_kl(0.3, 0.3).value, 0.0);
  EXPECT_EQ(bernoulli_kl(0.3, 0.3).grad_logit, 0.0);
  EXPECT_NEAR(bernoulli_kl(1.0 - kProbEpsilon, 0.5).value, std::log(2.0), 1e-5);
}

TEST(Kl, NonNegativeWithEqualityOnlyAtEqualProbabilities) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double p = rng.uniform();
    const double q = rng.uniform();
    const double kl = bernoulli_kl(p, q).value;
    EXPECT_GE(kl, 0.0);
    if (clamp_probability(p) != clamp_probability(q)) {
      EXPECT_GT(kl, 0.0);
    }
  }
  EXPECT_EQ(bernoulli_kl(0.0, 1e-9).value, 0.0);
}

TEST(MpdLoss, AllZeroLogitsGiveTwoLn2) {
  const auto r = mpd_loss(Matrix(5, 1), Matrix(5, 1));
  EXPECT_NEAR(r.value, 2.0 * std::log(2.0), 1e-12);
}

TEST(MpdLoss, PerfectDiscriminationApproachesZero) {
  const auto r = mpd_loss(Matrix(3, 1, 40.0f), Matrix(3, 1, -40.0f));
  EXPECT_LT(r.value, 1e-12);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(MpdLoss, PositiveGradientClosedForm) {
  const Matrix pos = Matrix::from_rows({{0.3f}, {-1.2f}});
  const auto r = mpd_loss(pos, Matrix(2, 1));
  for (std::size_t i = 0; i < 2; ++i) {
    const double z = pos(i, 0);
    EXPECT_NEAR(r.grad_pos(i, 0), -(1.0 - sigmoid(z)) / 2.0, 1e-7);
  }
  EXPECT_GT(r.grad_neg(0, 0), 0.0f);
}

TEST(MpdLoss, KBlocksAreNormalizedByPositiveBatch) {
  const auto r = mpd_loss(Matrix(4, 1), Matrix(12, 1));
  EXPECT_NEAR(r.value, std::log(2.0) + 3.0 * std::log(2.0), 1e-12);
  EXPECT_THROW(mpd_loss(Matrix(4, 1), Matrix(10, 1)), DimensionError);
}

TEST(DistillLoss, ClosedFormAtHalfAlpha) {
  const Matrix logits = Matrix::from_rows({{0.0f}});
  const std::vector<float> hard{1.0f};
  const std::vector<float> soft{0.9f};
  const double expected =
      0.5 * std::log(2.0) + 0.5 * (0.9 * std::log(0.9 / 0.5) + 0.1 * std::log(0.1 / 0.5));
  EXPECT_NEAR(distill_loss(logits, hard, soft, 0.5).value, expected, 1e-6);
}

TEST(DistillLoss, AlphaOneGradientEqualsBce) {
  Rng rng(2);
  Matrix logits(16, 1);
  Matrix y(16, 1);
  std::vector<float> hard(16);
  std::vector<float> soft(16);
  for (std::size_t i = 0; i < 16; ++i) {
    logits(i, 0) = static_cast<float>(rng.normal());
    hard[i] = y(i, 0) = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    soft[i] = static_cast<float>(rng.uniform(0.01, 0.99));
  }
  const auto d = distill_loss(logits, hard, soft, 1.0);
  const auto b = bce_loss(logits, y);
  EXPECT_TRUE(bit_equal(d.grad, b.grad));
  EXPECT_EQ(d.value, b.value);
}

TEST(DistillLoss, StudentEqualToTeacherGivesExactZeroAtAlphaZero) {
  Rng rng(4);
  Matrix logits(32, 1);
  std::vector<float> hard(32, 1.0f);
  std::vector<float> soft(32);
  for (std::size_t i = 0; i < 32; ++i) {
    logits(i, 0) = static_cast<float>(rng.normal() * 4.0);
    soft[i] = static_cast<float>(clamp_probability(sigmoid(logits(i, 0))));
  }
  const auto r = distill_loss(logits, hard, soft, 0.0);
  EXPECT_EQ(r.value, 0.0);
  for (float g : r.grad.values()) EXPECT_EQ(g, 0.0f);
}

TEST(DistillLoss, AffineInAlpha) {
  const Matrix logits = Matrix::from_rows({{0.4f}, {-1.0f}, {2.0f}});
  const std::vector<float> hard{1, 0, 0};
  const std::vector<float> soft{0.7f, 0.2f, 0.6f};
  const double l0 = distill_loss(logits, hard, soft, 0.0).value;
  const double l1 = distill_loss(logits, hard, soft, 1.0).value;
  for (double a : {0.1, 0.25, 0.5, 0.9}) {
    EXPECT_NEAR(distill_loss(logits, hard, soft, a).value, (1 - a) * l0 + a * l1, 1e-12);
  }
}

TEST(DistillLoss, RejectsAlphaOutsideUnitInterval) {
  const std::vector<float> v{1.0f};
  EXPECT_THROW(distill_loss(Matrix(1, 1), v, v, 1.5), ValidationError);
}

// ------------------------------------------------------------ gradient checks

PartySchema mixed_schema() {
  PartySchema s;
  s.party = Party::A;
  s.fields = {FieldSpec::numerical("n0"), FieldSpec::categorical("c0", 5, 3), FieldSpec::numerical("n1")};
  return s;
}

Matrix mixed_inputs(std::size_t rows, Rng& rng) {
  Matrix x(rows, 3);
  for (std::size_t r = 0; r < rows; ++r) {
    x(r, 0) = static_cast<float>(rng.normal());
    x(r, 1) = static_cast<float>(rng.below(5));
    x(r, 2) = static_cast<float>(rng.normal());
  }
  return x;
}

Matrix random_labels(std::size_t rows, Rng& rng) {
  Matrix y(rows, 1);
  for (float& v : y.values()) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  return y;
}

TEST(GradCheck, LinearModelWithBce) {
  Rng rng(1);
  PartySchema s;
  s.fields = {FieldSpec::numerical("a"), FieldSpec::numerical("b"), FieldSpec::numerical("c")};
  BottomSpec bottom;
  bottom.hidden = {};
  LocalModel<float> m(s, bottom, TopSpec{{}});
  Rng r1(2), r2(3);
  m.init(r1, r2);
  Matrix x(8, 3);
  for (float& v : x.values()) v = static_cast<float>(rng.normal());
  const auto report = check_local_bce(m, x, random_labels(8, rng));
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst_param;
}

TEST(GradCheck, TwoLayerReluNet) {
  Rng rng(7);
  PartySchema s;
  s.fields = {FieldSpec::numerical("a"), FieldSpec::numerical("b"), FieldSpec::numerical("c"),
              FieldSpec::numerical("d")};
  BottomSpec bottom;
  bottom.hidden = {6};
  LocalModel<float> m(s, bottom, TopSpec{{5}});
  Rng r1(8), r2(9);
  m.init(r1, r2);
  Matrix x(10, 4);
  for (float& v : x.values()) v = static_cast<float>(rng.normal());
  const auto report = check_local_bce(m, x, random_labels(10, rng));
  EXPECT_TRUE(report.passed) << report.worst_param << " " << report.max_rel_error;
}

TEST(GradCheck, EmbeddingsAndDenseStack) {
  Rng rng(12);
  LocalModel<float> m(mixed_schema(), BottomSpec{{6, 4}, Activation::ReLU}, TopSpec{{5}});
  Rng r1(13), r2(14);
  m.init(r1, r2);
  const auto report = check_local_bce(m, mixed_inputs(12, rng), random_labels(12, rng));
  EXPECT_TRUE(report.passed) << report.worst_param << " " << report.max_rel_error;
  EXPECT_GT(report.checked, 50u);
}

TEST(GradCheck, CorruptedGradientFails) {
  Rng rng(21);
  LocalModel<float> m(mixed_schema(), BottomSpec{{4}, Activation::ReLU}, TopSpec{{3}});
  Rng r1(22), r2(23);
  m.init(r1, r2);
  const Matrix x = mixed_inputs(6, rng);
  const Matrix y = random_labels(6, rng);
  const auto loss = bce_loss(m.forward(x, true), y);
  m.backward(loss.grad);
  auto params = m.params();
  params.back().grad->values()[0] += 0.5f;
  LocalModel<double> shadow = m.cast<double>();
  const MatrixD xs = x.cast<double>();
  const MatrixD ys = y.cast<double>();
  const auto report = grad_check(params, shadow.params(), [&] {
    const auto l = bce_loss(shadow.forward(xs), ys);
    return ShadowEval{l.value, 0};
  });
  EXPECT_FALSE(report.passed);
}

TEST(GradCheck, MpdLoss) {
  Rng rng(31);
  Matrix logits(12, 1);
  for (float& v : logits.values()) v = static_cast<float>(rng.normal() * 2.0);
  const auto report = check_loss_logits(logits, [](const auto& z) {
    using M = std::decay_t<decltype(z)>;
    const auto r = mpd_loss(slice_rows(z, 0, 4), slice_rows(z, 4, 12));
    const M parts[] = {r.grad_pos, r.grad_neg};
    return LossResult<typename M::value_type>{r.value, stack_rows<typename M::value_type>(parts)};
  });
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(GradCheck, DistillLoss) {
  Rng rng(41);
  Matrix logits(10, 1);
  std::vector<float> hard(10);
  std::vector<float> soft(10);
  for (std::size_t i = 0; i < 10; ++i) {
    logits(i, 0) = static_cast<float>(rng.normal());
    hard[i] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    soft[i] = static_cast<float>(rng.uniform(0.05, 0.95));
  }
  for (double alpha : {0.0, 0.5, 1.0}) {
    const auto report =
        check_loss_logits(logits, [&](const auto& z) { return distill_loss(z, hard, soft, alpha); });
    EXPECT_TRUE(report.passed) << alpha << " " << report.max_rel_error;
  }
}

}  // namespace
}  // namespace vfedssd
