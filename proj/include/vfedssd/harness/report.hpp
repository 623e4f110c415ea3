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
#include <optional>
#include <string>
#include <vector>

#include "vfedssd/eval/metrics.hpp"
#include "vfedssd/harness/config.hpp"

namespace vfedssd {

/// Outcome of one pipeline stage. Stages shared by several methods run
/// once per experiment.
struct StageReport {
  std::string name;
  bool ok = true;
  std::string error;
  /// Set when the stage failed because the connection to party B broke.
  bool transport_failure = false;
  std::optional<MetricHistory> history;
  std::size_t best_epoch = 0;
  std::optional<double> validation_auc;
  std::optional<double> test_auc;
  /// Protocol traffic of the stage, both directions, as seen by party A.
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  /// Traffic of the test-set inference pass alone.
  std::uint64_t inference_messages = 0;
  std::size_t labels_read = 0;
  double wall_seconds = 0.0;
};

struct MethodReport {
  Method method = Method::VFL;
  bool ok = true;
  std::string failed_stage;
  std::string error;
  std::vector<std::string> stages;
  std::optional<double> validation_auc;
  std::optional<double> test_auc;
  /// test_auc minus the BaselineLocal test AUC of the same data and seed.
  std::optional<double> improvement;
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  std::uint64_t inference_messages = 0;
};

struct RunReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  TransportMode transport = TransportMode::Inproc;
  std::vector<MethodReport> methods;
  std::vector<StageReport> stages;

  bool ok() const;
  bool transport_failure() const;
  const MethodReport* find(Method m) const;
  const StageReport* stage(const std::string& name) const;

  /// JSON text. Wall-clock fields are left out when timing is false, so two
  /// runs of the same configuration compare equal.
  std::string to_json(bool timing = true) const;
  void save(const std::filesystem::path& path) const;
};

}  // namespace vfedssd
