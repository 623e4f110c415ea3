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

#include <fstream>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "vfedssd/eval/metrics.hpp"
#include "vfedssd/numeric/loss.hpp"
#include "vfedssd/splitnn/checkpoint.hpp"
#include "vfedssd/splitnn/federation.hpp"
#include "vfedssd/splitnn/trainer.hpp"

namespace vfedssd {
namespace {

using testing::DirectPair;
using testing::TempDir;

PartySchema one_numeric(Party p, const std::string& name) {
  PartySchema s;
  s.party = p;
  s.fields = {FieldSpec::numerical(name)};
  return s;
}

FederatedArch identity_arch() {
  FederatedArch arch;
  arch.bottom_a.hidden = {};
  arch.bottom_b.hidden = {};
  arch.top.hidden = {};
  return arch;
}

void init_pair(DirectPair& p, std::uint64_t seed) {
  p.active->init(seed);
  p.b_end->expect(MessageType::Control);
  p.passive->init(seed);
}

bool params_equal(std::vector<ParamRef<float>> a, std::vector<ParamRef<float>> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || !bit_equal(*a[i].value, *b[i].value)) return false;
  }
  return true;
}

std::vector<ParamRef<float>> pair_params(DirectPair& p) {
  auto out = p.active->params();
  for (auto& r : p.passive->params()) out.push_back(r);
  return out;
}

TEST(SplitModelTest, IdentityCompositionAddsBothParties) {
  SplitModel<float> m(one_numeric(Party::A, "a"), one_numeric(Party::B, "b"), identity_arch().bottom_a,
                      identity_arch().bottom_b, identity_arch().top);
  m.top().layers()[0].weight().fill(1.0f);
  m.top().layers()[0].bias().fill(0.0f);
  const Matrix logit = m.forward(Matrix::from_rows({{1.0f}}), Matrix::from_rows({{2.0f}}));
  EXPECT_EQ(logit(0, 0), 3.0f);
}

TEST(SplitModelTest, BottomRejectsWrongWidth) {
  BottomModel<float> b(one_numeric(Party::A, "a"), BottomSpec{{3}, Activation::ReLU});
  EXPECT_THROW(b.forward(Matrix(2, 2)), DimensionError);
}

TEST(SplitModelTest, BottomRejectsNonIndexCategorical) {
  PartySchema s;
  s.fields = {FieldSpec::categorical("c", 4, 2)};
  BottomModel<float> b(s, BottomSpec{{}, Activation::Identity});
  EXPECT_THROW(b.forward(Matrix::from_rows({{1.5f}})), DimensionError);
  EXPECT_THROW(b.forward(Matrix::from_rows({{4.0f}})), DimensionError);
}

TEST(SplitModelTest, BackwardWithoutForwardIsStateError) {
  const auto spec = testing::small_spec();
  const auto ds = synth_federated(spec, 1);
  SplitModel<float> m(ds.schema_a, ds.schema_b, testing::small_arch().bottom_a, testing::small_arch().bottom_b,
                      testing::small_arch().top);
  EXPECT_THROW(m.backward(Matrix(3, 1)), StateError);
}

TEST(SplitModelTest, GradientMatchesDoubleShadow) {
  const auto ds = synth_federated(testing::small_spec(), 2);
  const FederatedArch arch = testing::small_arch();
  SplitModel<float> m(ds.schema_a, ds.schema_b, arch.bottom_a, arch.bottom_b, arch.top);
  Rng rng(3);
  testing::randomize(m.params(), rng);
  // Embedding indices must remain indices; only the dense inputs are data.
  const Matrix x_a = slice_rows(ds.labeled.x_a, 0, 16);
  const Matrix x_b = slice_rows(ds.labeled.x_b, 0, 16);
  const Matrix y = Matrix::column(std::span<const float>(ds.labeled.y.data(), 16));
  const auto loss = bce_loss(m.forward(x_a, x_b, true), y);
  m.backward(loss.grad);
  SplitModel<double> shadow = m.cast<double>();
  const MatrixD xa = x_a.cast<double>(), xb = x_b.cast<double>(), yd = y.cast<double>();
  auto eval = [&] {
    const auto l = bce_loss(shadow.forward(xa, xb, true), yd);
    Fnv1a64 h;
    testing::add_signature(h, shadow.bottom_a().layers());
    testing::add_signature(h, shadow.bottom_b().layers());
    testing::add_signature(h, shadow.top().layers());
    shadow.bottom_a().clear_record();
    shadow.bottom_b().clear_record();
    shadow.top().clear_record();
    return ShadowEval{l.value, h.digest()};
  };
  const auto report = grad_check(m.params(), shadow.params(), eval, {});
  EXPECT_TRUE(report.passed) << report.worst_param << " rel=" << report.max_rel_error;
}

struct Fixture {
  testing::PartyViews v = testing::party_views(testing::small_spec(), 5);
  FederatedArch arch = testing::small_arch();
};

Batch train_batch(const Fixture& f, std::size_t begin, std::size_t end) {
  const auto& a = f.v.active.features.train;
  const auto& b = f.v.passive.features.train;
  Batch batch;
  batch.x_a = slice_rows(a, begin, end);
  batch.x_b = slice_rows(b, begin, end);
  batch.y = std::vector<float>(f.v.active.train_y.begin() + begin, f.v.active.train_y.begin() + end);
  return batch;
}

TEST(Federated, OneStepExchangesExactlyTwoMessages) {
  Fixture f;
  DirectPair p(f.v.active, f.v.passive, f.arch);
  init_pair(p, 9);
  p.set_optimizer(AdamConfig{});
  const auto before_a = p.a_end->stats();
  const Batch b = train_batch(f, 0, 32);
  const Matrix logits = federated_forward(*p.active, *p.passive, b);
  ASSERT_EQ(logits.rows(), 32u);
  ASSERT_EQ(logits.cols(), 1u);
  const auto loss = bce_loss(logits, Matrix::column(std::span<const float>(*b.y)));
  federated_backward(*p.active, *p.passive, loss.grad);
  const auto s = p.a_end->stats();
  EXPECT_EQ(s.messages() - before_a.messages(), 2u);
  EXPECT_EQ(s.received(MessageType::Activation), 1u);
  EXPECT_EQ(s.sent(MessageType::Gradient), 1u);
  const auto t = p.a_end->transcript();
  EXPECT_EQ(t[t.size() - 2].rows, 32u);
  EXPECT_EQ(t[t.size() - 2].cols, p.active->d_b());
  EXPECT_EQ(t.back().rows, 32u);
  EXPECT_EQ(t.back().cols, p.active->d_b());
}

TEST(Federated, MatchesMonolithicTrainingBitForBit) {
  Fixture f;
  SplitModel<float> mono(f.v.active.features.schema, f.v.passive.features.schema, f.arch.bottom_a, f.arch.bottom_b,
                         f.arch.top);
  Rng rng(11);
  mono.bottom_a().init(rng);
  mono.bottom_b().init(rng);
  mono.top().init(rng);
  DirectPair p(f.v.active, f.v.passive, f.arch);
  p.load(mono);
  AdamConfig c;
  c.lr = 1e-2;
  c.l2 = 1e-4;
  p.set_optimizer(c);
  AdamState adam(c);
  for (std::size_t step = 0; step < 6; ++step) {
    const Batch b = train_batch(f, step * 40, step * 40 + 40);
    const Matrix y = Matrix::column(std::span<const float>(*b.y));
    const auto mono_loss = bce_loss(mono.forward(b.x_a, b.x_b, true), y);
    mono.backward(mono_loss.grad);
    adam.step(mono.params());
    const auto fed_loss = bce_loss(federated_forward(*p.active, *p.passive, b), y);
    federated_backward(*p.active, *p.passive, fed_loss.grad);
    ASSERT_EQ(mono_loss.value, fed_loss.value) << "step " << step;
  }
  SplitModel<float> fed = mono;
  fed.bottom_a() = p.active->bottom();
  fed.bottom_b() = p.passive->bottom();
  fed.top() = p.active->top();
  EXPECT_TRUE(params_equal(mono.params(), fed.params()));
}

TEST(Federated, ZeroUpstreamGradientLeavesParametersUnchanged) {
  Fixture f;
  DirectPair p(f.v.active, f.v.passive, f.arch);
  init_pair(p, 4);
  p.set_optimizer(AdamConfig{});
  const std::uint64_t before = params_digest(pair_params(p));
  const Batch b = train_batch(f, 0, 16);
  federated_forward(*p.active, *p.passive, b);
  federated_backward(*p.active, *p.passive, Matrix(16, 1));
  EXPECT_EQ(params_digest(pair_params(p)), before);
}

TEST(Federated, BackwardWithoutForwardIsStateError) {
  Fixture f;
  DirectPair p(f.v.active, f.v.passive, f.arch);
  init_pair(p, 4);
  EXPECT_THROW(p.active->backward_and_update(Matrix(8, 1)), StateError);
}

TEST(Federated, WrongActivationShapeIsProtocolError) {
  Fixture f;
  DirectPair p(f.v.active, f.v.passive, f.arch);
  init_pair(p, 4);
  const Batch b = train_batch(f, 0, 8);
  p.passive->send_activation(b.x_b);
  EXPECT_THROW(p.active->forward_train(slice_rows(b.x_a, 0, 7)), ProtocolError);
}

TEST(Federated, AbortedStepLeavesPassiveUnchanged) {
  Fixture f;
  DirectPair p(f.v.active, f.v.passive, f.arch);
  init_pair(p, 4);
  p.set_optimizer(AdamConfig{});
  const std::uint64_t before = params_digest(p.passive->params());
  const Batch b = train_batch(f, 0, 8);
  federated_forward(*p.active, *p.passive, b);
  p.active->abort_step();
  EXPECT_FALSE(p.passive->apply_gradient());
  EXPECT_EQ(params_digest(p.passive->params()), before);
}

TEST(Federated, SameSeedSameInitialization) {
  Fixture f;
  DirectPair p1(f.v.active, f.v.passive, f.arch);
  DirectPair p2(f.v.active, f.v.passive, f.arch);
  init_pair(p1, 21);
  init_pair(p2, 21);
  EXPECT_TRUE(params_equal(pair_params(p1), pair_params(p2)));
  DirectPair p3(f.v.active, f.v.passive, f.arch);
  init_pair(p3, 22);
  EXPECT_NE(params_digest(pair_params(p1)), params_digest(pair_params(p3)));
}

TEST(Federated, ServedRunIsDeterministic) {
  Fixture f;
  std::uint64_t digests[2];
  std::uint64_t transcripts[2];
  for (int run = 0; run < 2; ++run) {
    InprocFederation fed(f.v.active, f.v.passive, f.arch);
    fed.active().init(3);
    fed.active().set_optimizer(AdamConfig{});
    FederatedLearner learner(fed.active(), Segment::Train, fed.active().read_labels(Segment::Train), 64, 128);
    fit(learner, FitOptions{"vfl", 2, 3, 7, {}});
    digests[run] = params_digest(fed.active().params());
    transcripts[run] = fed.active_channel().transcript_digest();
    fed.finish();
    digests[run] ^= params_digest(fed.passive().params());
  }
  EXPECT_EQ(digests[0], digests[1]);
  EXPECT_EQ(transcripts[0], transcripts[1]);
}

TEST(Federated, PassiveCommandFailureIsReported) {
  Fixture f;
  InprocFederation fed(f.v.active, f.v.passive, f.arch);
  fed.active().init(1);
  fed.active_channel().send(MessageType::Control, std::nullopt, {{"cmd", "restore"}});
  try {
    fed.active_channel().expect(MessageType::Activation);
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("restore without a snapshot"), std::string::npos) << e.what();
  }
  // The passive party keeps serving after a failed command.
  EXPECT_GT(federated_auc(fed.active(), Segment::Validation, 64), 0.0);
  fed.finish();
}

TEST(Trainer, ZeroEpochsLeaveModelUnchanged) {
  Fixture f;
  LocalModel<float> m(f.v.active.features.schema, f.arch.bottom_a, f.arch.top);
  Rng r1(1), r2(2);
  m.init(r1, r2);
  const std::uint64_t before = params_digest(m.params());
  LocalLearner::Data d;
  d.train_x = &f.v.active.features.train;
  d.train_targets = f.v.active.train_y;
  d.validation_x = &f.v.active.features.validation;
  d.validation_y = f.v.active.validation_y;
  LocalLearner learner(m, d, AdamConfig{}, 32);
  const FitResult r = fit(learner, FitOptions{"local", 0, 3, 1, {}});
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_TRUE(r.history.epochs.empty());
  EXPECT_EQ(params_digest(m.params()), before);
}

std::uint64_t train_local(const Fixture& f, std::uint64_t seed) {
  LocalModel<float> m(f.v.active.features.schema, f.arch.bottom_a, f.arch.top);
  Rng r1(derive_seed(seed, "bottom_a")), r2(derive_seed(seed, "top"));
  m.init(r1, r2);
  LocalLearner::Data d;
  d.train_x = &f.v.active.features.train;
  d.train_targets = f.v.active.train_y;
  d.validation_x = &f.v.active.features.validation;
  d.validation_y = f.v.active.validation_y;
  LocalLearner learner(m, d, AdamConfig{}, 32);
  fit(learner, FitOptions{"local", 3, 3, seed, {}});
  return params_digest(m.params());
}

TEST(Trainer, LocalTrainingIsBitReproducible) {
  Fixture f;
  EXPECT_EQ(train_local(f, 5), train_local(f, 5));
  EXPECT_NE(train_local(f, 5), train_local(f, 6));
}

TEST(Trainer, EpochSeedsDiffer) {
  EXPECT_NE(epoch_seed(1, 1), epoch_seed(1, 2));
  EXPECT_NE(epoch_seed(1, 1), epoch_seed(2, 1));
  EXPECT_EQ(epoch_seed(9, 3), epoch_seed(9, 3));
}

class DivergingLearner : public Learner {
 public:
  EpochStats train_epoch(std::uint64_t) override {
    if (++epoch_ == 3) {
      value_ = -1;
      throw DivergenceError("loss is nan");
    }
    value_ = epoch_;
    return {};
  }
  std::optional<double> validate() override { return 0.5 + 0.1 * value_; }
  void snapshot() override { saved_ = value_; }
  void restore() override { value_ = saved_; }
  int value_ = 0;
  int saved_ = 0;
  int epoch_ = 0;
};

TEST(Trainer, DivergenceRestoresLastGoodParameters) {
  DivergingLearner l;
  EXPECT_THROW(fit(l, FitOptions{"x", 10, 3, 1, {}}), DivergenceError);
  EXPECT_EQ(l.value_, 2);
}

TEST(Trainer, EarlyStopKeepsBestEpoch) {
  class Peaked : public Learner {
   public:
    EpochStats train_epoch(std::uint64_t) override {
      ++epoch;
      return {};
    }
    std::optional<double> validate() override { return epoch == 2 ? 0.9 : 0.6; }
    void snapshot() override { saved = epoch; }
    void restore() override { restored = saved; }
    int epoch = 0, saved = -1, restored = -1;
  } l;
  const FitResult r = fit(l, FitOptions{"x", 20, 3, 1, {}});
  EXPECT_EQ(r.best_epoch, 2u);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(l.epoch, 5);
  EXPECT_EQ(l.restored, 2);
}

// Learns a label rule on a dataset without shared latents and reports test
// AUCs of the split model and of each party alone.
struct RuleAucs {
  double federated = 0;
  double local_a = 0;
  double local_b = 0;
};

double local_auc(const PartyFeatures& x, const ActiveData& labels, const FederatedArch& arch, const BottomSpec& bottom,
                 const std::string& name) {
  LocalModel<float> m(x.schema, bottom, arch.top, name);
  Rng r1(1), r2(2);
  m.init(r1, r2);
  LocalLearner::Data d;
  d.train_x = &x.train;
  d.train_targets = labels.train_y;
  d.validation_x = &x.validation;
  d.validation_y = labels.validation_y;
  AdamConfig c;
  c.lr = 1e-2;
  LocalLearner learner(m, d, c, 128);
  fit(learner, FitOptions{"local", 15, 3, 1, {}});
  return auc(predict_local(m, x.test, 512), labels.test_y).auc;
}

RuleAucs learn_rule(LabelRule rule) {
  SyntheticSpec s;
  s.numerical_a = 4;
  s.numerical_b = 4;
  s.latent_dim = 2;
  s.feature_noise = 0.1;
  s.rule = rule;
  s.n_labeled = 6000;
  s.n_unlabeled = 0;
  s.n_test = 3000;
  const auto v = testing::party_views(s, 13);
  FederatedArch arch;
  arch.bottom_a.hidden = {16, 8};
  arch.bottom_b.hidden = {16, 8};
  arch.top.hidden = {16};
  RuleAucs out;
  {
    InprocFederation fed(v.active, v.passive, arch);
    fed.active().init(1);
    AdamConfig c;
    c.lr = 1e-2;
    fed.active().set_optimizer(c);
    FederatedLearner learner(fed.active(), Segment::Train, fed.active().read_labels(Segment::Train), 128, 512);
    fit(learner, FitOptions{"vfl", 15, 3, 1, {}});
    out.federated = federated_auc(fed.active(), Segment::Test, 512);
    fed.finish();
  }
  out.local_a = local_auc(v.active.features, v.active, arch, arch.bottom_a, "bottom_a");
  out.local_b = local_auc(v.passive.features, v.active, arch, arch.bottom_b, "bottom_b");
  return out;
}

TEST(Learnability, XorNeedsBothParties) {
  const RuleAucs r = learn_rule(LabelRule::Xor);
  EXPECT_GE(r.federated, 0.9);
  EXPECT_LE(r.local_a, 0.6);
  EXPECT_LE(r.local_b, 0.6);
}

TEST(Learnability, AOnlyRuleIsInvisibleToB) {
  const RuleAucs r = learn_rule(LabelRule::AOnly);
  EXPECT_GE(r.local_a, 0.9);
  EXPECT_GE(r.federated, 0.9);
  EXPECT_NEAR(r.local_b, 0.5, 0.05);
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  Fixture f;
  TempDir dir;
  SplitModel<float> m(f.v.active.features.schema, f.v.passive.features.schema, f.arch.bottom_a, f.arch.bottom_b,
                      f.arch.top);
  Rng rng(8);
  testing::randomize(m.params(), rng);
  const Checkpoint c = capture(m.params(), 0x51, 0x7A6);
  save_checkpoint(dir / "m.ckpt", c);
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.schema_hash, 0x51u);
  EXPECT_EQ(back.tag_hash, 0x7A6u);
  EXPECT_EQ(back.digest(), c.digest());
  SplitModel<float> fresh(f.v.active.features.schema, f.v.passive.features.schema, f.arch.bottom_a, f.arch.bottom_b,
                          f.arch.top);
  apply_checkpoint(back, fresh.params());
  EXPECT_TRUE(params_equal(fresh.params(), m.params()));
  const Matrix x_a = slice_rows(f.v.active.features.test, 0, 20);
  const Matrix x_b = slice_rows(f.v.passive.features.test, 0, 20);
  EXPECT_TRUE(bit_equal(fresh.forward(x_a, x_b), m.forward(x_a, x_b)));
}

TEST(Checkpoint, PrefixSelectsOneParty) {
  Fixture f;
  SplitModel<float> m(f.v.active.features.schema, f.v.passive.features.schema, f.arch.bottom_a, f.arch.bottom_b,
                      f.arch.top);
  Rng rng(8);
  testing::randomize(m.params(), rng);
  const Checkpoint c = capture(m.params(), 0, 0);
  EXPECT_TRUE(c.has_prefix("bottom_b"));
  BottomModel<float> b(f.v.passive.features.schema, f.arch.bottom_b);
  std::vector<ParamRef<float>> params;
  b.append_params(params, "bottom_b");
  apply_checkpoint(c, params, "bottom_b");
  EXPECT_TRUE(bit_equal(b.layers()[0].weight(), m.bottom_b().layers()[0].weight()));
}

TEST(Checkpoint, MissingAndMisshapenTensors) {
  Fixture f;
  LocalModel<float> m(f.v.active.features.schema, f.arch.bottom_a, f.arch.top);
  Checkpoint c = capture(m.params(), 0, 0);
  Checkpoint missing = c;
  missing.tensors.pop_back();
  EXPECT_THROW(apply_checkpoint(missing, m.params()), StateError);
  Checkpoint misshapen = c;
  misshapen.tensors.back().value = Matrix(2, 2);
  EXPECT_THROW(apply_checkpoint(misshapen, m.params()), DimensionError);
}

TEST(Checkpoint, CorruptFileIsRejected) {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.ckpt", std::ios::binary);
    out << "VFCKgarbage";
  }
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), Error);
}

}  // namespace
}  // namespace vfedssd
