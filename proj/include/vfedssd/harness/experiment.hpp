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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vfedssd/data/dataset.hpp"
#include "vfedssd/harness/config.hpp"
#include "vfedssd/harness/report.hpp"
#include "vfedssd/splitkd/distill.hpp"
#include "vfedssd/splitnn/federation.hpp"
#include "vfedssd/transport/handshake.hpp"

namespace vfedssd {

/// Both schemas of a configuration (synthetic: derived from the generator
/// spec; CSV: read from the schema files).
std::pair<PartySchema, PartySchema> load_schemas(const ExperimentConfig& config);

/// One party's encoded table. Never touches the other party's files.
PartyTable load_party(const ExperimentConfig& config, Party party);

ValidationSplit validation_split(const ExperimentConfig& config, std::size_t n_labeled);

/// The Hello both parties announce for a configuration.
HandshakeInfo hello_for(const ExperimentConfig& config, const PartySchema& a, const PartySchema& b);

/// Directory holding the artifacts of a configuration: artifacts/<hash>.
std::filesystem::path run_directory(const ExperimentConfig& config);

/// Ordered stage names of a method's pipeline.
std::vector<std::string> method_stages(Method method, const ExperimentConfig& config);

struct RunOptions {
  std::ostream* log = nullptr;
  bool write_artifacts = true;
};

/// A session between party A (this object) and party B (an in-process
/// thread or a TCP peer) over which method pipelines run. Stages are
/// computed once and shared by every method that needs them.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config, RunOptions options = {});
  ~Experiment();
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const ExperimentConfig& config() const { return config_; }
  const Session& session() const { return session_; }
  ActiveParty& active() { return *active_; }
  std::filesystem::path run_dir() const { return run_dir_; }

  /// Runs a stage (and the stages it depends on) unless already done.
  /// Throws the stage's error on failure.
  const StageReport& stage(const std::string& name);

  /// Runs the pipelines of the given methods and collects the report.
  /// BaselineLocal is always run so improvements can be computed; it is
  /// only listed when requested.
  RunReport run(std::span<const Method> methods);

  /// Local model produced by a local stage (local, local-sd, local-mpd,
  /// local-ssd).
  LocalModel<float>& local_model(const std::string& stage);
  const SoftLabelCache& soft_labels(const std::string& stage) const;

  /// Ends the session (Bye) and waits for an in-process party B.
  void close();
  /// Party B of an in-process session, after close().
  PassiveParty& passive();

 private:
  void log(const std::string& line);
  std::uint64_t stage_seed(const std::string& tag) const;
  std::uint64_t tag_hash(const std::string& stage) const;
  FitOptions fit_options(const std::string& stage, std::size_t max_epochs);
  void save_federated(const std::string& stage);
  void save_local(const std::string& stage);
  void record_history(const std::string& stage, const FitResult& fit, StageReport& r);
  LocalModel<float> fresh_local_model() const;

  void run_local(StageReport& r);
  void run_vfl(StageReport& r);
  void run_soft_labels(StageReport& r, const std::string& teacher_tag, Segment segment);
  void run_st_soft(StageReport& r);
  void run_st_finetune(StageReport& r);
  void run_mpd_pretrain(StageReport& r);
  void run_finetune(StageReport& r);
  void run_local_mpd(StageReport& r);
  void run_distill(StageReport& r, const std::string& soft_stage, bool from_pretrained);
  void federated_test(StageReport& r);
  void local_test(StageReport& r, LocalModel<float>& model);

  ExperimentConfig config_;
  RunOptions options_;
  std::filesystem::path run_dir_;
  PartySchema schema_a_;
  PartySchema schema_b_;
  std::unique_ptr<InprocFederation> inproc_;
  std::unique_ptr<Channel> tcp_channel_;
  std::unique_ptr<ActiveParty> tcp_active_;
  ActiveParty* active_ = nullptr;
  Session session_;
  bool closed_ = false;
  bool transport_failed_ = false;

  std::map<std::string, StageReport> stages_;
  std::vector<std::string> stage_order_;
  std::map<std::string, LocalModel<float>> local_models_;
  std::map<std::string, SoftLabelCache> soft_labels_;
};

/// Runs config.method (plus BaselineLocal for the improvement column).
RunReport run(const ExperimentConfig& config, RunOptions options = {});
/// Runs several methods over one session, sharing stages.
RunReport run_matrix(const ExperimentConfig& config, std::span<const Method> methods, RunOptions options = {});

}  // namespace vfedssd
