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

#include "vfedssd/splitnn/party.hpp"

#include <cmath>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"
#include "vfedssd/common/text.hpp"
#include "vfedssd/numeric/loss.hpp"

namespace vfedssd {

std::size_t bottom_out_dim(const PartySchema& schema, const BottomSpec& spec) {
  return spec.hidden.empty() ? schema.post_embed_dim() : spec.hidden.back();
}

namespace {

std::map<std::string, std::string> optimizer_meta(const AdamConfig& c) {
  return {{"lr", format_double(c.lr)},
          {"l2", format_double(c.l2)},
          {"beta1", format_double(c.beta1)},
          {"beta2", format_double(c.beta2)},
          {"epsilon", format_double(c.epsilon)}};
}

AdamConfig optimizer_from(const ProtocolMessage& m) {
  AdamConfig c;
  c.lr = parse_double(m.get("lr"), "lr");
  c.l2 = parse_double(m.get("l2"), "l2");
  c.beta1 = parse_double(m.get("beta1"), "beta1");
  c.beta2 = parse_double(m.get("beta2"), "beta2");
  c.epsilon = parse_double(m.get("epsilon"), "epsilon");
  return c;
}

Matrix gather_targets(std::span<const float> targets, std::span<const std::size_t> idx) {
  Matrix y(idx.size(), 1);
  for (std::size_t i = 0; i < idx.size(); ++i) y(i, 0) = targets[idx[i]];
  return y;
}

}  // namespace

// ---------------------------------------------------------------- active

ActiveParty::ActiveParty(ActiveData data, FederatedArch arch, std::size_t d_b, Channel& channel)
    : data_(std::move(data)), arch_(std::move(arch)), channel_(channel), d_b_(d_b) {
  bottom_ = BottomModel<float>(data_.features.schema, arch_.bottom_a);
  top_ = TopModel<float>(bottom_.out_dim() + d_b_, arch_.top);
}

std::vector<ParamRef<float>> ActiveParty::params() {
  std::vector<ParamRef<float>> out;
  bottom_.append_params(out, "bottom_a");
  top_.append_params(out, "top");
  return out;
}

std::span<const float> ActiveParty::read_labels(Segment s) {
  ++labels_read_;
  return data_.labels(s);
}

void ActiveParty::control(const std::string& cmd, std::map<std::string, std::string> meta) {
  meta["cmd"] = cmd;
  channel_.send(MessageType::Control, std::nullopt, std::move(meta));
}

void ActiveParty::init(std::uint64_t seed) {
  Rng rb(derive_seed(seed, "bottom_a"));
  bottom_ = BottomModel<float>(data_.features.schema, arch_.bottom_a);
  bottom_.init(rb);
  init_top(seed);
  control("init", {{"seed", std::to_string(seed)}});
}

void ActiveParty::init_top(std::uint64_t seed) {
  Rng rt(derive_seed(seed, "top"));
  top_ = TopModel<float>(bottom_.out_dim() + d_b_, arch_.top);
  top_.init(rt);
}

void ActiveParty::set_optimizer(const AdamConfig& config) {
  adam_ = AdamState(config);
  control("optim", optimizer_meta(config));
}

void ActiveParty::stash(const std::string& tag) {
  stash_.insert_or_assign(tag, std::make_pair(bottom_, top_));
  control("stash", {{"tag", tag}});
}

void ActiveParty::load(const std::string& tag) {
  auto it = stash_.find(tag);
  if (it == stash_.end()) throw StateError("no stashed model '" + tag + "'");
  bottom_ = it->second.first;
  top_ = it->second.second;
  control("load", {{"tag", tag}});
}

const BottomModel<float>& ActiveParty::stashed_bottom(const std::string& tag) const {
  auto it = stash_.find(tag);
  if (it == stash_.end()) throw StateError("no stashed model '" + tag + "'");
  return it->second.first;
}

const TopModel<float>& ActiveParty::stashed_top(const std::string& tag) const {
  auto it = stash_.find(tag);
  if (it == stash_.end()) throw StateError("no stashed model '" + tag + "'");
  return it->second.second;
}

void ActiveParty::snapshot() {
  snapshot_ = snapshot_values(params());
  control("snapshot");
}

void ActiveParty::restore() {
  if (!snapshot_) throw StateError("restore without a snapshot");
  restore_values(params(), *snapshot_);
  control("restore");
}

void ActiveParty::save(const std::filesystem::path& root, const std::filesystem::path& rel_dir,
                       std::uint64_t tag_hash) {
  const auto p = params();
  save_checkpoint(root / rel_dir / "active.ckpt", capture(p, data_.features.schema.hash(), tag_hash));
  control("save", {{"dir", rel_dir.generic_string()}, {"tag_hash", std::to_string(tag_hash)}});
}

void ActiveParty::bye() { channel_.send(MessageType::Bye); }

void ActiveParty::begin_remote_epoch(Segment segment, std::uint64_t seed, std::size_t batch_size,
                                     std::size_t min_batch) {
  control("train_epoch", {{"segment", std::string(segment_name(segment))},
                          {"seed", std::to_string(seed)},
                          {"batch", std::to_string(batch_size)},
                          {"min_batch", std::to_string(min_batch)}});
}

Matrix ActiveParty::receive_activation(MessageType type, std::size_t rows) {
  ProtocolMessage msg = channel_.expect(type);
  Matrix h = std::move(*msg.payload);
  if (h.rows() != rows || h.cols() != d_b_) {
    throw ProtocolError("passive activation is " + shape_string(h) + ", expected " + std::to_string(rows) + "x" +
                        std::to_string(d_b_));
  }
  return h;
}

Matrix ActiveParty::forward_train(const Matrix& x_a) {
  const Matrix h_b = receive_activation(MessageType::Activation, x_a.rows());
  const Matrix h_a = bottom_.forward(x_a, true);
  return top_.forward(concat_cols(h_a, h_b), true);
}

void ActiveParty::backward_and_update(const Matrix& dlogits) {
  const Matrix d = top_.backward(dlogits);
  const std::size_t da = bottom_.out_dim();
  bottom_.backward(slice_cols(d, 0, da));
  send_gradient(slice_cols(d, da, d.cols()));
  update();
}

void ActiveParty::send_gradient(const Matrix& dh_b) { channel_.send(MessageType::Gradient, dh_b); }

void ActiveParty::update() { adam_.step(params()); }

void ActiveParty::abort_step() {
  bottom_.clear_record();
  top_.clear_record();
  control("abort");
}

EpochStats ActiveParty::train_epoch(Segment segment, std::span<const float> targets, std::uint64_t seed,
                                    std::size_t batch_size) {
  const Matrix& x = data_.features.segment(segment);
  if (targets.size() != x.rows()) {
    throw DimensionError("segment " + std::string(segment_name(segment)) + " has " + std::to_string(x.rows()) +
                         " rows but " + std::to_string(targets.size()) + " targets");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] >= 0.0f && targets[i] <= 1.0f)) {
      throw ValidationError("target outside [0, 1] at row " + std::to_string(i));
    }
  }
  const auto order = batch_indices(x.rows(), batch_size, seed, 1);
  begin_remote_epoch(segment, seed, batch_size, 1);
  EpochStats stats;
  double total = 0.0;
  for (const auto& idx : order) {
    const Matrix x_a = gather_rows(x, std::span<const std::size_t>(idx));
    const Matrix logits = forward_train(x_a);
    const auto loss = bce_loss(logits, gather_targets(targets, idx));
    if (!std::isfinite(loss.value)) {
      abort_step();
      throw DivergenceError("loss became non-finite at step " + std::to_string(stats.steps + 1));
    }
    backward_and_update(loss.grad);
    total += loss.value * static_cast<double>(idx.size());
    ++stats.steps;
  }
  stats.loss = x.rows() == 0 ? 0.0 : total / static_cast<double>(x.rows());
  return stats;
}

std::vector<float> ActiveParty::predict(Segment segment, std::size_t batch_size) {
  const Matrix& x = data_.features.segment(segment);
  const auto order = batch_indices(x.rows(), batch_size, std::nullopt, 1);
  control("eval", {{"segment", std::string(segment_name(segment))}, {"batch", std::to_string(batch_size)}});
  std::vector<float> out;
  out.reserve(x.rows());
  for (const auto& idx : order) {
    const Matrix x_a = gather_rows(x, std::span<const std::size_t>(idx));
    const Matrix h_b = receive_activation(MessageType::EvalActivation, idx.size());
    const Matrix logits = top_.forward(concat_cols(bottom_.forward(x_a), h_b));
    out.insert(out.end(), logits.values().begin(), logits.values().end());
  }
  return out;
}

// ---------------------------------------------------------------- passive

PassiveParty::PassiveParty(PassiveData data, BottomSpec spec, Channel& channel, std::filesystem::path artifact_dir)
    : data_(std::move(data)), spec_(std::move(spec)), channel_(channel), artifact_dir_(std::move(artifact_dir)) {
  bottom_ = BottomModel<float>(data_.features.schema, spec_);
}

std::vector<ParamRef<float>> PassiveParty::params() {
  std::vector<ParamRef<float>> out;
  bottom_.append_params(out, "bottom_b");
  return out;
}

void PassiveParty::init(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "bottom_b"));
  bottom_ = BottomModel<float>(data_.features.schema, spec_);
  bottom_.init(rng);
}

void PassiveParty::set_optimizer(const AdamConfig& config) { adam_ = AdamState(config); }

void PassiveParty::send_activation(const Matrix& x_b, MessageType type) {
  const bool train = type == MessageType::Activation;
  channel_.send(type, bottom_.forward(x_b, train));
}

bool PassiveParty::apply_gradient() {
  ProtocolMessage msg = channel_.recv();
  if (msg.type == MessageType::Control && msg.get("cmd") == "abort") {
    bottom_.clear_record();
    return false;
  }
  if (msg.type != MessageType::Gradient) {
    throw ProtocolError("expected Gradient, received " + std::string(message_type_name(msg.type)));
  }
  bottom_.backward(*msg.payload);
  adam_.step(params());
  return true;
}

void PassiveParty::train_epoch(Segment segment, std::uint64_t seed, std::size_t batch_size, std::size_t min_batch) {
  const Matrix& x = data_.features.segment(segment);
  for (const auto& idx : batch_indices(x.rows(), batch_size, seed, min_batch)) {
    send_activation(gather_rows(x, std::span<const std::size_t>(idx)), MessageType::Activation);
    if (!apply_gradient()) return;
  }
}

void PassiveParty::eval(Segment segment, std::size_t batch_size) {
  const Matrix& x = data_.features.segment(segment);
  for (const auto& idx : batch_indices(x.rows(), batch_size, std::nullopt, 1)) {
    send_activation(gather_rows(x, std::span<const std::size_t>(idx)), MessageType::EvalActivation);
  }
}

void PassiveParty::handle(const ProtocolMessage& msg) {
  if (msg.type != MessageType::Control) {
    throw ProtocolError("passive party expected a command, received " + std::string(message_type_name(msg.type)));
  }
  const std::string& cmd = msg.get("cmd");
  if (cmd == "init") {
    init(parse_u64(msg.get("seed"), "seed"));
  } else if (cmd == "optim") {
    set_optimizer(optimizer_from(msg));
  } else if (cmd == "stash") {
    stash_.insert_or_assign(msg.get("tag"), bottom_);
  } else if (cmd == "load") {
    auto it = stash_.find(msg.get("tag"));
    if (it == stash_.end()) throw StateError("no stashed bottom '" + msg.get("tag") + "'");
    bottom_ = it->second;
  } else if (cmd == "snapshot") {
    snapshot_ = snapshot_values(params());
  } else if (cmd == "restore") {
    if (!snapshot_) throw StateError("restore without a snapshot");
    restore_values(params(), *snapshot_);
  } else if (cmd == "train_epoch") {
    train_epoch(parse_segment(msg.get("segment")), parse_u64(msg.get("seed"), "seed"),
                parse_u64(msg.get("batch"), "batch"), parse_u64(msg.get("min_batch"), "min_batch"));
  } else if (cmd == "eval") {
    eval(parse_segment(msg.get("segment")), parse_u64(msg.get("batch"), "batch"));
  } else if (cmd == "save") {
    const auto path = artifact_dir_ / msg.get("dir") / "passive.ckpt";
    save_checkpoint(path, capture(params(), data_.features.schema.hash(), parse_u64(msg.get("tag_hash"), "tag_hash")));
  } else if (cmd == "abort") {
    bottom_.clear_record();
  } else {
    throw ProtocolError("unknown command '" + cmd + "'");
  }
}

void PassiveParty::serve() {
  while (true) {
    ProtocolMessage msg = channel_.recv();
    if (msg.type == MessageType::Bye) return;
    try {
      handle(msg);
    } catch (const TransportError&) {
      throw;
    } catch (const Error& e) {
      channel_.send(MessageType::Control, std::nullopt, {{"cmd", "error"}, {"message", e.what()}});
    }
  }
}

// ---------------------------------------------------------------- composition

Matrix federated_forward(ActiveParty& active, PassiveParty& passive, const Batch& batch) {
  passive.send_activation(batch.x_b, MessageType::Activation);
  return active.forward_train(batch.x_a);
}

void federated_backward(ActiveParty& active, PassiveParty& passive, const Matrix& dlogits) {
  active.backward_and_update(dlogits);
  if (!passive.apply_gradient()) throw ProtocolError("step aborted by the active party");
}

}  // namespace vfedssd
