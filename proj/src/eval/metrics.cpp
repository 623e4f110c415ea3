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

#include "vfedssd/eval/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace vfedssd {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: samples differ in length");
  if (x.size() < 2) throw MetricUndefinedError("pearson needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw MetricUndefinedError("pearson undefined for a constant sample");
  return sxy / std::sqrt(sxx * syy);
}

std::optional<std::size_t> MetricHistory::best_epoch() const {
  std::optional<std::size_t> best;
  double best_auc = -std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) {
    if (e.validation_auc && *e.validation_auc > best_auc) {
      best_auc = *e.validation_auc;
      best = e.epoch;
    }
  }
  return best;
}

std::optional<double> MetricHistory::best_auc() const {
  const auto b = best_epoch();
  if (!b) return std::nullopt;
  for (const auto& e : epochs) {
    if (e.epoch == *b) return e.validation_auc;
  }
  return std::nullopt;
}

std::string MetricHistory::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::json j;
    j["stage"] = stage;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["validation_auc"] = e.validation_auc ? nlohmann::json(*e.validation_auc) : nlohmann::json(nullptr);
    if (e.train_accuracy) j["train_accuracy"] = *e.train_accuracy;
    j["wall_seconds"] = e.wall_seconds;
    j["messages"] = e.messages;
    j["bytes"] = e.bytes;
    out += j.dump();
    out += '\n';
  }
  return out;
}

MetricHistory MetricHistory::from_jsonl(const std::string& text) {
  MetricHistory h;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    h.stage = j.at("stage").get<std::string>();
    EpochRecord e;
    e.epoch = j.at("epoch").get<std::size_t>();
    e.train_loss = j.at("train_loss").get<double>();
    if (!j.at("validation_auc").is_null()) e.validation_auc = j.at("validation_auc").get<double>();
    if (j.contains("train_accuracy")) e.train_accuracy = j.at("train_accuracy").get<double>();
    e.wall_seconds = j.at("wall_seconds").get<double>();
    e.messages = j.at("messages").get<std::uint64_t>();
    e.bytes = j.at("bytes").get<std::uint64_t>();
    h.epochs.push_back(e);
  }
  return h;
}

EarlyStopDecision early_stop(const MetricHistory& history, std::size_t patience) {
  EarlyStopDecision d;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t since = 0;
  for (const auto& e : history.epochs) {
    if (!e.validation_auc) continue;
    const double a = *e.validation_auc;
    if (a > best + kEarlyStopMinDelta) {
      since = 0;
    } else {
      ++since;
    }
    if (a > best) {
      best = a;
      d.best_epoch = e.epoch;
    }
  }
  d.stop = since >= std::max<std::size_t>(patience, 1);
  return d;
}

std::optional<std::size_t> epochs_to_auc(const MetricHistory& history, double target) {
  for (const auto& e : history.epochs) {
    if (e.validation_auc && *e.validation_auc >= target) return e.epoch;
  }
  return std::nullopt;
}

}  // namespace vfedssd
