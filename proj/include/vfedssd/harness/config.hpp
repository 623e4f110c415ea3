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
#include <string>
#include <string_view>
#include <vector>

#include "vfedssd/data/loader.hpp"
#include "vfedssd/data/synth.hpp"
#include "vfedssd/mpd/mpd.hpp"
#include "vfedssd/numeric/adam.hpp"
#include "vfedssd/splitkd/distill.hpp"
#include "vfedssd/splitnn/party.hpp"

namespace vfedssd {

enum class Method : std::uint8_t { BaselineLocal, VFL, VFL_ST, VFL_MPD, Local_SD, Local_MPD, Local_SSD };

inline constexpr Method kAllMethods[] = {Method::BaselineLocal, Method::VFL,       Method::VFL_ST,
                                         Method::VFL_MPD,       Method::Local_SD,  Method::Local_MPD,
                                         Method::Local_SSD};

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
/// Methods whose deployed model uses party-A features only.
bool is_local_method(Method m);

enum class TransportMode : std::uint8_t { Inproc, Tcp };
std::string_view transport_name(TransportMode t);
TransportMode parse_transport(std::string_view name);

enum class DataSource : std::uint8_t { Synthetic, Csv };

struct CsvSource {
  CsvPartyPaths a;
  CsvPartyPaths b;
  std::filesystem::path schema_a;
  std::filesystem::path schema_b;
  std::string label_column = "label";
};

/// Everything needed to run one method (or a set of methods) end to end.
///
/// Text form is INI with sections run, data, synth, csv, model, train,
/// pretrain, distill and st; every key has a default. Keys are addressed as
/// "section.key" by set() and by command-line overrides.
struct ExperimentConfig {
  // [run]
  Method method = Method::VFL;
  std::uint64_t seed = 1;
  TransportMode transport = TransportMode::Inproc;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7070;
  std::filesystem::path artifacts = "runs";
  double timeout_seconds = 30.0;

  // [data], [synth], [csv]
  DataSource source = DataSource::Synthetic;
  SyntheticSpec synth;
  std::uint64_t synth_seed = 0;
  CsvSource csv;

  // [model]
  FederatedArch arch;

  // [train]  lr is the learning rate of stages trained from scratch,
  // finetune_lr that of stages started from pre-trained or soft-trained
  // parameters.
  double lr = 1e-2;
  double finetune_lr = 1e-3;
  double l2 = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 256;
  std::size_t eval_batch_size = 4096;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;

  // [pretrain]
  MpdOptions mpd;
  std::size_t pretrain_epochs = 5;

  // [distill]
  double alpha = 0.5;
  StudentInit student_init = StudentInit::PretrainedBottom;
  bool unlabeled_soft = false;

  // [st]
  bool st_finetune = true;

  AdamConfig optimizer(double learning_rate) const;

  /// Sets one key from text; throws ConfigError for unknown keys or bad
  /// values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static std::vector<std::string> keys();

  /// Throws ConfigError when the method cannot run with this configuration.
  void validate() const;

  /// Resolved configuration, every key present.
  std::string to_ini() const;
  static ExperimentConfig from_ini(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Fingerprint of the keys both parties must agree on: everything except
  /// the method, the transport endpoint, the artifact root and file paths.
  std::uint64_t hash() const;
};

/// Fingerprint of both party schemas, as announced in the handshake.
std::uint64_t combined_schema_hash(const PartySchema& a, const PartySchema& b);

/// Parses "a,b,c" into layer widths; "" or "none" is the empty list.
std::vector<std::size_t> parse_widths(std::string_view text);
std::string format_widths(const std::vector<std::size_t>& widths);

}  // namespace vfedssd
