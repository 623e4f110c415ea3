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

#include "vfedssd/harness/grid.hpp"

#include <algorithm>
#include <json.hpp>

#include "vfedssd/common/error.hpp"

namespace vfedssd {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class T>
nlohmann::ordered_json opt(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

GridSpec GridSpec::parse(std::string_view text) {
  GridSpec spec;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    if (raw.empty() || raw[0] == '#') continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ConfigError("grid line " + std::to_string(line_no) + " has no '='");
    GridAxis axis;
    axis.keys = split(std::string_view(raw).substr(0, eq), '|');
    for (const auto& k : axis.keys) {
      const auto keys = ExperimentConfig::keys();
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw ConfigError("grid line " + std::to_string(line_no) + ": unknown key '" + k + "'");
      }
    }
    for (const auto& item : split(std::string_view(raw).substr(eq + 1), ',')) {
      auto values = split(item, '|');
      if (values.size() != axis.keys.size()) {
        throw ConfigError("grid line " + std::to_string(line_no) + ": value '" + item + "' does not cover " +
                          std::to_string(axis.keys.size()) + " keys");
      }
      axis.values.push_back(std::move(values));
    }
    spec.axes.push_back(std::move(axis));
  }
  return spec;
}

GridSpec GridSpec::standard() {
  return parse(
      "train.lr|train.finetune_lr = 1e-2|1e-3, 5e-3|5e-4\n"
      "train.l2 = 1e-4, 1e-5\n"
      "distill.alpha = 0.5, 0.9\n");
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::map<std::string, std::string> GridSpec::point(std::span<const std::size_t> index) const {
  std::map<std::string, std::string> out;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    for (std::size_t k = 0; k < axes[a].keys.size(); ++k) out[axes[a].keys[k]] = axes[a].values[index[a]][k];
  }
  return out;
}

bool key_affects(Method m, std::string_view key, const ExperimentConfig& c) {
  const bool mpd = m == Method::VFL_MPD || m == Method::Local_MPD || m == Method::Local_SSD;
  const bool distills = m == Method::Local_SD || m == Method::Local_SSD;
  if (key.starts_with("distill.")) return distills;
  if (key.starts_with("pretrain.")) return mpd;
  if (key.starts_with("st.")) return m == Method::VFL_ST;
  if (key == "train.finetune_lr") return mpd || (m == Method::VFL_ST && c.st_finetune);
  return true;
}

const GridMethodResult* GridReport::find(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

std::string GridReport::to_json() const {
  nlohmann::ordered_json j;
  j["runs"] = runs;
  auto ms = nlohmann::ordered_json::array();
  for (const auto& m : methods) {
    nlohmann::ordered_json r;
    r["method"] = std::string(method_name(m.method));
    r["selected"] = opt(m.selected);
    r["best_test_auc"] = opt(m.best_test_auc);
    r["median_test_auc"] = opt(m.median_test_auc);
    r["improvement"] = opt(m.improvement);
    auto cs = nlohmann::ordered_json::array();
    for (const auto& c : m.candidates) {
      nlohmann::ordered_json cj;
      cj["point"] = c.point;
      cj["seeds"] = c.seeds;
      auto va = nlohmann::ordered_json::array();
      auto ta = nlohmann::ordered_json::array();
      for (const auto& v : c.validation_auc) va.push_back(opt(v));
      for (const auto& v : c.test_auc) ta.push_back(opt(v));
      cj["validation_auc"] = va;
      cj["test_auc"] = ta;
      cj["selection_score"] = opt(c.selection_score);
      cs.push_back(std::move(cj));
    }
    r["candidates"] = std::move(cs);
    ms.push_back(std::move(r));
  }
  j["methods"] = std::move(ms);
  return j.dump(2);
}

GridReport grid(const ExperimentConfig& base, const GridSpec& spec, std::span<const Method> methods,
                std::span<const std::uint64_t> seeds, RunOptions options) {
  if (seeds.empty()) throw ConfigError("grid needs at least one seed");
  GridReport report;
  for (Method m : methods) report.methods.push_back(GridMethodResult{m, {}, {}, {}, {}, {}});

  std::vector<std::size_t> index(spec.axes.size(), 0);
  const std::size_t total = spec.size();
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rest = p;
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      index[a] = rest % spec.axes[a].values.size();
      rest /= spec.axes[a].values.size();
    }
    const auto assignment = spec.point(index);
    ExperimentConfig point_config = base;
    for (const auto& [k, v] : assignment) point_config.set(k, v);

    std::vector<Method> here;
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      bool canonical = true;
      for (std::size_t a = 0; a < spec.axes.size(); ++a) {
        bool relevant = false;
        for (const auto& k : spec.axes[a].keys) relevant = relevant || key_affects(methods[i], k, point_config);
        if (!relevant && index[a] != 0) canonical = false;
      }
      if (canonical) {
        here.push_back(methods[i]);
        slots.push_back(i);
      }
    }
    if (here.empty()) continue;

    std::vector<GridCandidate*> cands;
    for (std::size_t s : slots) {
      auto& c = report.methods[s].candidates.emplace_back();
      c.point = assignment;
      cands.push_back(&c);
    }
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = point_config;
      cfg.seed = seed;
      const RunReport run = run_matrix(cfg, here, options);
      ++report.runs;
      for (std::size_t i = 0; i < here.size(); ++i) {
        const MethodReport* mr = run.find(here[i]);
        cands[i]->seeds.push_back(seed);
        cands[i]->validation_auc.push_back(mr != nullptr ? mr->validation_auc : std::nullopt);
        cands[i]->test_auc.push_back(mr != nullptr ? mr->test_auc : std::nullopt);
      }
    }
  }

  for (auto& m : report.methods) {
    for (std::size_t i = 0; i < m.candidates.size(); ++i) {
      auto& c = m.candidates[i];
      std::vector<double> vals;
      for (const auto& v : c.validation_auc) {
        if (v) vals.push_back(*v);
      }
      if (vals.size() == c.validation_auc.size()) c.selection_score = median(vals);
      if (c.selection_score && (!m.selected || *c.selection_score > *m.candidates[*m.selected].selection_score)) {
        m.selected = i;
      }
    }
    if (!m.selected) continue;
    const auto& c = m.candidates[*m.selected];
    std::vector<double> tests;
    std::optional<std::size_t> best_seed;
    for (std::size_t s = 0; s < c.seeds.size(); ++s) {
      if (c.test_auc[s]) tests.push_back(*c.test_auc[s]);
      if (!best_seed || *c.validation_auc[s] > *c.validation_auc[*best_seed]) best_seed = s;
    }
    if (best_seed) m.best_test_auc = c.test_auc[*best_seed];
    m.median_test_auc = median(tests);
  }
  if (const auto* b = report.find(Method::BaselineLocal); b != nullptr && b->best_test_auc) {
    for (auto& m : report.methods) {
      if (m.best_test_auc) m.improvement = *m.best_test_auc - *b->best_test_auc;
    }
  }
  return report;
}

}  // namespace vfedssd
