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
#include <memory>
#include <random>
#include <string>

#include "vfedssd/common/rng.hpp"
#include "vfedssd/data/dataset.hpp"
#include "vfedssd/data/synth.hpp"
#include "vfedssd/splitnn/model.hpp"
#include "vfedssd/splitnn/party.hpp"
#include "vfedssd/transport/channel.hpp"

namespace vfedssd::testing {

/// A small mixed numerical / categorical dataset.
inline SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.numerical_a = 3;
  s.numerical_b = 2;
  s.categorical_a = 2;
  s.categorical_b = 2;
  s.cardinality = 8;
  s.buckets = 16;
  s.embed_dim = 3;
  s.latent_dim = 2;
  s.shared = 0.5;
  s.n_labeled = 400;
  s.n_unlabeled = 600;
  s.n_test = 200;
  return s;
}

inline FederatedArch small_arch() {
  FederatedArch arch;
  arch.bottom_a.hidden = {6, 5};
  arch.bottom_b.hidden = {4};
  arch.top.hidden = {7};
  return arch;
}

struct PartyViews {
  PartitionedDataset dataset;
  ValidationSplit split;
  ActiveData active;
  PassiveData passive;
};

inline PartyViews party_views(const SyntheticSpec& spec, std::uint64_t seed) {
  PartyViews v;
  v.dataset = synth_federated(spec, seed);
  v.split = split_validation(v.dataset.labeled.size(), seed);
  v.active = make_active_data(party_table(v.dataset, Party::A), v.split);
  v.passive = make_passive_data(party_table(v.dataset, Party::B), v.split);
  return v;
}

/// Both parties in one thread over an in-process channel pair, stepped by
/// hand (no serve loop).
struct DirectPair {
  std::unique_ptr<Channel> a_end;
  std::unique_ptr<Channel> b_end;
  std::unique_ptr<PassiveParty> passive;
  std::unique_ptr<ActiveParty> active;

  DirectPair(ActiveData a, PassiveData b, const FederatedArch& arch) {
    auto [ca, cb] = make_inproc_pair();
    a_end = std::move(ca);
    b_end = std::move(cb);
    const std::size_t d_b = bottom_out_dim(b.features.schema, arch.bottom_b);
    passive = std::make_unique<PassiveParty>(std::move(b), arch.bottom_b, *b_end);
    active = std::make_unique<ActiveParty>(std::move(a), arch, d_b, *a_end);
  }

  /// Sets the same optimizer on both sides, consuming the control frame the
  /// active party emits.
  void set_optimizer(const AdamConfig& c) {
    active->set_optimizer(c);
    b_end->expect(MessageType::Control);
    passive->set_optimizer(c);
  }

  /// Copies a monolithic model's weights into the two parties.
  void load(const SplitModel<float>& m) {
    active->bottom() = m.bottom_a();
    active->top() = m.top();
    passive->bottom() = m.bottom_b();
  }
};

/// Fills every parameter with uniform values in [-scale, scale].
template <class T>
void randomize(std::vector<ParamRef<T>> params, Rng& rng, double scale = 0.5) {
  for (auto& p : params) {
    for (T& v : p.value->values()) v = static_cast<T>(rng.uniform(-scale, scale));
  }
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("vfedssd-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace vfedssd::testing
