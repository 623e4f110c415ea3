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

#include <future>

#include "support/fixtures.hpp"
#include "vfedssd/harness/config.hpp"
#include "vfedssd/harness/experiment.hpp"
#include "vfedssd/harness/grid.hpp"
#include "vfedssd/harness/serve.hpp"

namespace vfedssd {
namespace {

using testing::TempDir;

ExperimentConfig tiny_config(const std::filesystem::path& artifacts) {
  ExperimentConfig c;
  c.synth = testing::small_spec();
  c.arch = testing::small_arch();
  c.artifacts = artifacts;
  c.batch_size = 64;
  c.eval_batch_size = 256;
  c.max_epochs = 2;
  c.pretrain_epochs = 1;
  c.mpd.batch_size = 128;
  return c;
}

TEST(Config, IniRoundTrip) {
  ExperimentConfig c;
  c.method = Method::Local_SSD;
  c.lr = 5e-3;
  c.arch.top.hidden = {32, 16};
  c.synth.rule = LabelRule::AOnly;
  c.alpha = 0.9;
  const ExperimentConfig back = ExperimentConfig::from_ini(c.to_ini());
  EXPECT_EQ(back.to_ini(), c.to_ini());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(back.method, Method::Local_SSD);
  EXPECT_EQ(back.arch.top.hidden, (std::vector<std::size_t>{32, 16}));
}

TEST(Config, SetAndGet) {
  ExperimentConfig c;
  c.set("train.lr", "0.005");
  EXPECT_EQ(c.lr, 0.005);
  c.set("model.bottom_a", "8,4");
  EXPECT_EQ(c.get("model.bottom_a"), "8,4");
  c.set("model.top", "none");
  EXPECT_TRUE(c.arch.top.hidden.empty());
  c.set("run.method", "VFL_MPD");
  EXPECT_EQ(c.method, Method::VFL_MPD);
  EXPECT_THROW(c.set("train.learning_rate", "1"), ConfigError);
  EXPECT_THROW(c.set("train.lr", "fast"), ConfigError);
  for (const auto& k : ExperimentConfig::keys()) EXPECT_NO_THROW(c.get(k)) << k;
}

TEST(Config, FileRoundTrip) {
  TempDir dir;
  ExperimentConfig c;
  c.seed = 42;
  c.save(dir / "c.ini");
  EXPECT_EQ(ExperimentConfig::load(dir / "c.ini").seed, 42u);
}

TEST(Config, UnknownIniKeyIsRejected) {
  EXPECT_THROW(ExperimentConfig::from_ini("[train]\nspeed = 3\n"), ConfigError);
}

TEST(Config, ValidationIsMethodAware) {
  ExperimentConfig c;
  c.synth.n_unlabeled = 0;
  c.method = Method::VFL;
  EXPECT_NO_THROW(c.validate());
  c.method = Method::VFL_MPD;
  EXPECT_THROW(c.validate(), ConfigError);
  c.method = Method::Local_SSD;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, HashCoversSharedKeysOnly) {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.method = Method::Local_SD;
  b.transport = TransportMode::Tcp;
  b.port = 9999;
  b.artifacts = "/elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.lr = 5e-3;
  EXPECT_NE(a.hash(), b.hash());
  ExperimentConfig c = a;
  c.seed = 2;
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, Widths) {
  EXPECT_EQ(parse_widths("64,32"), (std::vector<std::size_t>{64, 32}));
  EXPECT_TRUE(parse_widths("").empty());
  EXPECT_EQ(format_widths({}), "none");
  EXPECT_THROW(parse_widths("64,,2"), ValidationError);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("VFL_XYZ"), ValidationError);
  EXPECT_TRUE(is_local_method(Method::Local_SSD));
  EXPECT_FALSE(is_local_method(Method::VFL_MPD));
}

TEST(Methods, StageLists) {
  ExperimentConfig c;
  EXPECT_EQ(method_stages(Method::BaselineLocal, c), (std::vector<std::string>{"local"}));
  EXPECT_EQ(method_stages(Method::VFL_MPD, c), (std::vector<std::string>{"mpd-pretrain", "finetune"}));
  EXPECT_EQ(method_stages(Method::Local_MPD, c), (std::vector<std::string>{"mpd-pretrain", "local-mpd"}));
  EXPECT_EQ(method_stages(Method::Local_SSD, c),
            (std::vector<std::string>{"mpd-pretrain", "finetune", "finetune-soft-train", "local-ssd"}));
  EXPECT_EQ(method_stages(Method::VFL_ST, c),
            (std::vector<std::string>{"vfl", "vfl-soft-unlabeled", "st-soft", "st-finetune"}));
  c.st_finetune = false;
  EXPECT_EQ(method_stages(Method::VFL_ST, c).back(), "st-soft");
}

TEST(Grid, ParseAndEnumerate) {
  const GridSpec g = GridSpec::parse("# comment\ntrain.lr|train.finetune_lr = 1e-2|1e-3, 5e-3|5e-4\n\ntrain.l2 = 1e-4, 1e-5\n");
  ASSERT_EQ(g.axes.size(), 2u);
  EXPECT_EQ(g.size(), 4u);
  const std::vector<std::size_t> idx{1, 0};
  const auto p = g.point(idx);
  EXPECT_EQ(p.at("train.lr"), "5e-3");
  EXPECT_EQ(p.at("train.finetune_lr"), "5e-4");
  EXPECT_EQ(p.at("train.l2"), "1e-4");
  EXPECT_THROW(GridSpec::parse("train.lr|train.l2 = 1e-2\n"), ConfigError);
}

TEST(Grid, DefaultGridHasFourOrEightPointsPerMethod) {
  const GridSpec g = GridSpec::standard();
  EXPECT_EQ(g.size(), 8u);
  ExperimentConfig c;
  for (Method m : kAllMethods) {
    std::size_t points = 1;
    for (const auto& axis : g.axes) {
      bool relevant = false;
      for (const auto& k : axis.keys) relevant = relevant || key_affects(m, k, c);
      if (relevant) points *= axis.values.size();
    }
    const bool distills = m == Method::Local_SD || m == Method::Local_SSD;
    EXPECT_EQ(points, distills ? 8u : 4u) << method_name(m);
  }
}

TEST(Grid, SizeOneGridEqualsPlainRuns) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  const std::vector<Method> methods{Method::VFL};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const GridReport g = grid(c, GridSpec::parse("train.l2 = 1e-5\n"), methods, seeds, RunOptions{nullptr, false});
  const GridMethodResult* r = g.find(Method::VFL);
  ASSERT_NE(r, nullptr);
  ASSERT_EQ(r->candidates.size(), 1u);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    ExperimentConfig s = c;
    s.seed = seeds[i];
    s.method = Method::VFL;
    const RunReport plain = run(s, RunOptions{nullptr, false});
    EXPECT_EQ(r->candidates[0].test_auc[i], plain.find(Method::VFL)->test_auc) << "seed " << seeds[i];
    EXPECT_EQ(r->candidates[0].validation_auc[i], plain.find(Method::VFL)->validation_auc);
  }
}

TEST(Grid, RunsOnlyRelevantPoints) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  const std::vector<Method> methods{Method::VFL, Method::Local_SD};
  const std::vector<std::uint64_t> seeds{1};
  const GridSpec g = GridSpec::parse("train.l2 = 1e-4, 1e-5\ndistill.alpha = 0.5, 0.9\n");
  const GridReport r = grid(c, g, methods, seeds, RunOptions{nullptr, false});
  EXPECT_EQ(r.find(Method::VFL)->candidates.size(), 2u);
  EXPECT_EQ(r.find(Method::Local_SD)->candidates.size(), 4u);
  ASSERT_TRUE(r.find(Method::Local_SD)->selected.has_value());
  const auto& sel = r.find(Method::Local_SD)->candidates[*r.find(Method::Local_SD)->selected];
  for (const auto& cand : r.find(Method::Local_SD)->candidates) {
    EXPECT_LE(cand.selection_score.value_or(0.0), sel.selection_score.value_or(0.0));
  }
}

TEST(Run, BaselineLocalSendsNoMessages) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  c.method = Method::BaselineLocal;
  c.synth.rule = LabelRule::AOnly;
  const RunReport r = run(c, RunOptions{nullptr, true});
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.methods.size(), 1u);
  EXPECT_TRUE(r.methods[0].test_auc.has_value());
  EXPECT_EQ(r.methods[0].messages, 0u);
  EXPECT_EQ(r.methods[0].inference_messages, 0u);
}

TEST(Run, MatrixReportsStagesTrafficAndImprovements) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  const std::vector<Method> all(std::begin(kAllMethods), std::end(kAllMethods));
  const RunReport r = run_matrix(c, all, RunOptions{nullptr, true});
  ASSERT_TRUE(r.ok());
  const double base = *r.find(Method::BaselineLocal)->test_auc;
  for (const auto& m : r.methods) {
    ASSERT_TRUE(m.test_auc.has_value()) << method_name(m.method);
    EXPECT_EQ(m.stages, method_stages(m.method, c));
    EXPECT_EQ(*m.improvement, *m.test_auc - base);
    if (is_local_method(m.method)) {
      EXPECT_EQ(m.inference_messages, 0u) << method_name(m.method);
    } else {
      EXPECT_GT(m.inference_messages, 0u) << method_name(m.method);
    }
  }
  EXPECT_EQ(r.stage("mpd-pretrain")->labels_read, 0u);
  EXPECT_GT(r.stage("mpd-pretrain")->messages, 0u);
  EXPECT_FALSE(r.stage("mpd-pretrain")->test_auc.has_value());
  EXPECT_TRUE(std::filesystem::exists(run_directory(c) / "config.ini"));
  EXPECT_TRUE(std::filesystem::exists(run_directory(c) / "report.json"));
}

TEST(Run, SameConfigSameReport) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  const std::vector<Method> methods{Method::VFL_ST, Method::Local_SD};
  const RunReport a = run_matrix(c, methods, RunOptions{nullptr, false});
  const RunReport b = run_matrix(c, methods, RunOptions{nullptr, false});
  EXPECT_EQ(a.to_json(false), b.to_json(false));
}

TEST(Run, ConfigErrorFailsBeforeAnyStage) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  c.method = Method::VFL_MPD;
  c.synth.n_unlabeled = 0;
  EXPECT_THROW(run(c, RunOptions{nullptr, false}), ConfigError);
}

TEST(Serve, TcpSessionMatchesInproc) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path() / "a");
  c.method = Method::VFL;
  ExperimentConfig inproc_cfg = c;
  const RunReport inproc = run(inproc_cfg, RunOptions{nullptr, false});

  ExperimentConfig b_cfg = c;
  b_cfg.artifacts = dir.path() / "b";
  std::promise<std::uint16_t> port;
  ServeOptions so;
  so.port = 0;
  so.accept_timeout_seconds = 30;
  so.on_listening = [&port](std::uint16_t p) { port.set_value(p); };
  auto served = std::async(std::launch::async, [&] { return serve_party_b(b_cfg, so); });
  ExperimentConfig a_cfg = c;
  a_cfg.transport = TransportMode::Tcp;
  a_cfg.port = port.get_future().get();
  const RunReport tcp = run(a_cfg, RunOptions{nullptr, false});
  const Session s = served.get();
  EXPECT_EQ(s.peer.config_hash, c.hash());
  ASSERT_TRUE(tcp.ok());
  EXPECT_EQ(tcp.find(Method::VFL)->test_auc, inproc.find(Method::VFL)->test_auc);
  EXPECT_EQ(tcp.find(Method::VFL)->messages, inproc.find(Method::VFL)->messages);
}

TEST(Serve, MismatchedConfigFailsTheHandshake) {
  TempDir dir;
  ExperimentConfig c = tiny_config(dir.path());
  ExperimentConfig b_cfg = c;
  b_cfg.batch_size = 32;
  std::promise<std::uint16_t> port;
  ServeOptions so;
  so.accept_timeout_seconds = 30;
  so.on_listening = [&port](std::uint16_t p) { port.set_value(p); };
  auto served = std::async(std::launch::async, [&] { return serve_party_b(b_cfg, so); });
  ExperimentConfig a_cfg = c;
  a_cfg.transport = TransportMode::Tcp;
  a_cfg.port = port.get_future().get();
  EXPECT_THROW(run(a_cfg, RunOptions{nullptr, false}), HandshakeError);
  EXPECT_THROW(served.get(), HandshakeError);
}

}  // namespace
}  // namespace vfedssd
