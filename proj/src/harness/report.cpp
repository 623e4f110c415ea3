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

#include "vfedssd/harness/report.hpp"

#include <fstream>
#include <json.hpp>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

namespace {

using nlohmann::ordered_json;

template <class T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json history_json(const MetricHistory& h, bool timing) {
  ordered_json epochs = ordered_json::array();
  for (const auto& e : h.epochs) {
    ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["validation_auc"] = opt(e.validation_auc);
    j["train_accuracy"] = opt(e.train_accuracy);
    if (timing) j["wall_seconds"] = e.wall_seconds;
    j["messages"] = e.messages;
    j["bytes"] = e.bytes;
    epochs.push_back(std::move(j));
  }
  return epochs;
}

}  // namespace

bool RunReport::ok() const {
  for (const auto& m : methods) {
    if (!m.ok) return false;
  }
  return true;
}

bool RunReport::transport_failure() const {
  for (const auto& s : stages) {
    if (s.transport_failure) return true;
  }
  return false;
}

const MethodReport* RunReport::find(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

const StageReport* RunReport::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string RunReport::to_json(bool timing) const {
  ordered_json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["transport"] = std::string(transport_name(transport));
  j["ok"] = ok();
  ordered_json ms = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json r;
    r["method"] = std::string(method_name(m.method));
    r["ok"] = m.ok;
    if (!m.ok) {
      r["failed_stage"] = m.failed_stage;
      r["error"] = m.error;
    }
    r["stages"] = m.stages;
    r["validation_auc"] = opt(m.validation_auc);
    r["test_auc"] = opt(m.test_auc);
    r["improvement"] = opt(m.improvement);
    r["messages"] = m.messages;
    r["bytes"] = m.bytes;
    r["inference_messages"] = m.inference_messages;
    ms.push_back(std::move(r));
  }
  j["methods"] = std::move(ms);
  ordered_json ss = ordered_json::array();
  for (const auto& s : stages) {
    ordered_json r;
    r["name"] = s.name;
    r["ok"] = s.ok;
    if (!s.ok) {
      r["error"] = s.error;
      r["transport_failure"] = s.transport_failure;
    }
    r["best_epoch"] = s.best_epoch;
    r["validation_auc"] = opt(s.validation_auc);
    r["test_auc"] = opt(s.test_auc);
    r["messages"] = s.messages;
    r["bytes"] = s.bytes;
    r["inference_messages"] = s.inference_messages;
    r["labels_read"] = s.labels_read;
    if (timing) r["wall_seconds"] = s.wall_seconds;
    r["history"] = s.history ? history_json(*s.history, timing) : ordered_json(nullptr);
    ss.push_back(std::move(r));
  }
  j["stages"] = std::move(ss);
  return j.dump(2);
}

void RunReport::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

}  // namespace vfedssd
