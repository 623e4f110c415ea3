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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vfedssd/data/dataset.hpp"
#include "vfedssd/numeric/adam.hpp"
#include "vfedssd/splitnn/checkpoint.hpp"
#include "vfedssd/splitnn/model.hpp"
#include "vfedssd/transport/channel.hpp"

namespace vfedssd {

/// Architecture both parties agree on.
struct FederatedArch {
  BottomSpec bottom_a;
  BottomSpec bottom_b;
  TopSpec top;
};

/// Output width of a bottom model over a schema.
std::size_t bottom_out_dim(const PartySchema& schema, const BottomSpec& spec);

struct EpochStats {
  double loss = 0.0;
  std::optional<double> accuracy;
  std::size_t steps = 0;
  std::size_t skipped_batches = 0;
};

/// Label-holding party: owns f_A, the top model g_A, the labels and the
/// driving side of every control exchange.
class ActiveParty {
 public:
  /// d_b is the width of the passive party's bottom output.
  ActiveParty(ActiveData data, FederatedArch arch, std::size_t d_b, Channel& channel);

  const ActiveData& data() const { return data_; }
  const FederatedArch& arch() const { return arch_; }
  Channel& channel() { return channel_; }
  BottomModel<float>& bottom() { return bottom_; }
  const BottomModel<float>& bottom() const { return bottom_; }
  TopModel<float>& top() { return top_; }
  const TopModel<float>& top() const { return top_; }
  std::vector<ParamRef<float>> params();
  std::size_t d_a() const { return bottom_.out_dim(); }
  std::size_t d_b() const { return d_b_; }

  /// Number of label reads so far (training targets or metric labels).
  std::size_t labels_read() const { return labels_read_; }
  std::span<const float> read_labels(Segment s);

  // Session control; each call also instructs the passive party.
  void init(std::uint64_t seed);
  /// Fresh top model only (the bottoms are kept).
  void init_top(std::uint64_t seed);
  void set_optimizer(const AdamConfig& config);
  void stash(const std::string& tag);
  void load(const std::string& tag);
  bool has_stash(const std::string& tag) const { return stash_.count(tag) != 0; }
  /// The stashed active-side models of a tag.
  const BottomModel<float>& stashed_bottom(const std::string& tag) const;
  const TopModel<float>& stashed_top(const std::string& tag) const;
  void snapshot();
  void restore();
  /// Writes root/rel_dir/active.ckpt and asks the passive party to write
  /// rel_dir/passive.ckpt under its own artifact directory.
  void save(const std::filesystem::path& root, const std::filesystem::path& rel_dir, std::uint64_t tag_hash);
  void bye();

  /// One supervised pass over a segment. targets has one value in [0, 1]
  /// per segment row.
  EpochStats train_epoch(Segment segment, std::span<const float> targets, std::uint64_t seed, std::size_t batch_size);
  /// Logits of every row of a segment, in row order.
  std::vector<float> predict(Segment segment, std::size_t batch_size);

  // Single-step primitives (one batch in flight).
  /// Asks the passive party to stream one pass over a segment: one
  /// Activation per batch of batch_indices(rows, batch_size, seed, min_batch),
  /// each answered by a Gradient (or an abort).
  void begin_remote_epoch(Segment segment, std::uint64_t seed, std::size_t batch_size, std::size_t min_batch);
  /// Receives h_B for the next batch, checking it has rows x d_b entries.
  Matrix receive_activation(MessageType type, std::size_t rows);
  /// Receives h_B for x_a's rows and returns the logits.
  Matrix forward_train(const Matrix& x_a);
  /// Backpropagates dlogits, sends dL/dh_B, then updates f_A and g_A.
  void backward_and_update(const Matrix& dlogits);
  void send_gradient(const Matrix& dh_b);
  /// One optimizer step on f_A and g_A with the current gradients.
  void update();
  /// Tells the passive party to drop the batch in flight.
  void abort_step();

 private:
  void control(const std::string& cmd, std::map<std::string, std::string> meta = {});

  ActiveData data_;
  FederatedArch arch_;
  Channel& channel_;
  BottomModel<float> bottom_;
  TopModel<float> top_;
  std::size_t d_b_ = 0;
  AdamState adam_;
  std::map<std::string, std::pair<BottomModel<float>, TopModel<float>>> stash_;
  std::optional<std::vector<Matrix>> snapshot_;
  std::size_t labels_read_ = 0;
};

/// Feature-only party: owns f_B and answers control commands. It is never
/// given labels, losses or top-model parameters.
class PassiveParty {
 public:
  PassiveParty(PassiveData data, BottomSpec spec, Channel& channel, std::filesystem::path artifact_dir = {});

  const PassiveData& data() const { return data_; }
  Channel& channel() { return channel_; }
  BottomModel<float>& bottom() { return bottom_; }
  const BottomModel<float>& bottom() const { return bottom_; }
  std::vector<ParamRef<float>> params();
  void set_artifact_dir(std::filesystem::path dir) { artifact_dir_ = std::move(dir); }

  void init(std::uint64_t seed);
  void set_optimizer(const AdamConfig& config);

  /// Computes and sends f_B(x_b). Training activations are recorded for the
  /// matching gradient.
  void send_activation(const Matrix& x_b, MessageType type = MessageType::Activation);
  /// Waits for the gradient of the batch in flight and updates f_B. Returns
  /// false if the active party aborted the step instead.
  bool apply_gradient();

  /// Answers control commands until Bye. Command failures are reported to
  /// the active party and do not end the loop; transport failures do.
  void serve();

 private:
  void handle(const ProtocolMessage& msg);
  void train_epoch(Segment segment, std::uint64_t seed, std::size_t batch_size, std::size_t min_batch);
  void eval(Segment segment, std::size_t batch_size);

  PassiveData data_;
  BottomSpec spec_;
  Channel& channel_;
  std::filesystem::path artifact_dir_;
  BottomModel<float> bottom_;
  AdamState adam_;
  std::map<std::string, BottomModel<float>> stash_;
  std::optional<std::vector<Matrix>> snapshot_;
};

/// Single-threaded composition of the two parties over a pair of in-process
/// channels: the passive side sends f_B(X_B), the active side returns logits.
Matrix federated_forward(ActiveParty& active, PassiveParty& passive, const Batch& batch);
/// Completes the step begun by federated_forward on both sides.
void federated_backward(ActiveParty& active, PassiveParty& passive, const Matrix& dlogits);

}  // namespace vfedssd
