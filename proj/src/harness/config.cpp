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

#include "vfedssd/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"
#include "vfedssd/common/text.hpp"

namespace vfedssd {

namespace {

constexpr std::string_view kMethodNames[] = {"BaselineLocal", "VFL",       "VFL_ST",   "VFL_MPD",
                                             "Local_SD",      "Local_MPD", "Local_SSD"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_bool(std::string_view s) {
  const std::string v = lower(s);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("expected a boolean, got '" + std::string(s) + "'");
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

Activation parse_activation(std::string_view s) {
  const std::string v = lower(s);
  if (v == "relu") return Activation::ReLU;
  if (v == "identity" || v == "none") return Activation::Identity;
  throw ValidationError("activation must be relu or identity, got '" + std::string(s) + "'");
}

std::string activation_text(Activation a) { return a == Activation::ReLU ? "relu" : "identity"; }

std::size_t parse_count(std::string_view s, std::string_view what) {
  return static_cast<std::size_t>(parse_u64(s, what));
}

struct Key {
  std::string name;
  bool shared;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define VF_KEY(name, shared, getter, setter)                                          \
  Key {                                                                               \
    name, shared, [](const ExperimentConfig& c) -> std::string { return getter; },   \
        [](ExperimentConfig& c, std::string_view v) { setter; }                      \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      VF_KEY("run.method", false, std::string(method_name(c.method)), c.method = parse_method(v)),
      VF_KEY("run.seed", true, std::to_string(c.seed), c.seed = parse_u64(v, "seed")),
      VF_KEY("run.transport", false, std::string(transport_name(c.transport)), c.transport = parse_transport(v)),
      VF_KEY("run.host", false, c.host, c.host = std::string(v)),
      VF_KEY("run.port", false, std::to_string(c.port), {
        const auto p = parse_u64(v, "port");
        if (p > 65535) throw ValidationError("port out of range");
        c.port = static_cast<std::uint16_t>(p);
      }),
      VF_KEY("run.artifacts", false, c.artifacts.generic_string(), c.artifacts = std::string(v)),
      VF_KEY("run.timeout", false, format_double(c.timeout_seconds), c.timeout_seconds = parse_double(v, "timeout")),

      VF_KEY("data.source", true, c.source == DataSource::Synthetic ? "synthetic" : "csv", {
        const std::string s = lower(v);
        if (s == "synthetic") {
          c.source = DataSource::Synthetic;
        } else if (s == "csv") {
          c.source = DataSource::Csv;
        } else {
          throw ValidationError("source must be synthetic or csv");
        }
      }),

      VF_KEY("synth.seed", true, std::to_string(c.synth_seed), c.synth_seed = parse_u64(v, "seed")),
      VF_KEY("synth.rule", true, std::string(label_rule_name(c.synth.rule)), c.synth.rule = parse_label_rule(v)),
      VF_KEY("synth.numerical_a", true, std::to_string(c.synth.numerical_a), c.synth.numerical_a = parse_count(v, "numerical_a")),
      VF_KEY("synth.numerical_b", true, std::to_string(c.synth.numerical_b), c.synth.numerical_b = parse_count(v, "numerical_b")),
      VF_KEY("synth.categorical_a", true, std::to_string(c.synth.categorical_a), c.synth.categorical_a = parse_count(v, "categorical_a")),
      VF_KEY("synth.categorical_b", true, std::to_string(c.synth.categorical_b), c.synth.categorical_b = parse_count(v, "categorical_b")),
      VF_KEY("synth.cardinality", true, std::to_string(c.synth.cardinality), c.synth.cardinality = parse_count(v, "cardinality")),
      VF_KEY("synth.buckets", true, std::to_string(c.synth.buckets), c.synth.buckets = parse_count(v, "buckets")),
      VF_KEY("synth.embed_dim", true, std::to_string(c.synth.embed_dim), c.synth.embed_dim = parse_count(v, "embed_dim")),
      VF_KEY("synth.latent_dim", true, std::to_string(c.synth.latent_dim), c.synth.latent_dim = parse_count(v, "latent_dim")),
      VF_KEY("synth.shared", true, format_double(c.synth.shared), c.synth.shared = parse_double(v, "shared")),
      VF_KEY("synth.feature_noise", true, format_double(c.synth.feature_noise), c.synth.feature_noise = parse_double(v, "feature_noise")),
      VF_KEY("synth.label_noise", true, format_double(c.synth.label_noise), c.synth.label_noise = parse_double(v, "label_noise")),
      VF_KEY("synth.n_labeled", true, std::to_string(c.synth.n_labeled), c.synth.n_labeled = parse_count(v, "n_labeled")),
      VF_KEY("synth.n_unlabeled", true, std::to_string(c.synth.n_unlabeled), c.synth.n_unlabeled = parse_count(v, "n_unlabeled")),
      VF_KEY("synth.n_test", true, std::to_string(c.synth.n_test), c.synth.n_test = parse_count(v, "n_test")),
      VF_KEY("synth.positive_rate", true, format_double(c.synth.positive_rate), c.synth.positive_rate = parse_double(v, "positive_rate")),

      VF_KEY("csv.a_labeled", false, c.csv.a.labeled.generic_string(), c.csv.a.labeled = std::string(v)),
      VF_KEY("csv.a_unlabeled", false, c.csv.a.unlabeled.generic_string(), c.csv.a.unlabeled = std::string(v)),
      VF_KEY("csv.a_test", false, c.csv.a.test.generic_string(), c.csv.a.test = std::string(v)),
      VF_KEY("csv.b_labeled", false, c.csv.b.labeled.generic_string(), c.csv.b.labeled = std::string(v)),
      VF_KEY("csv.b_unlabeled", false, c.csv.b.unlabeled.generic_string(), c.csv.b.unlabeled = std::string(v)),
      VF_KEY("csv.b_test", false, c.csv.b.test.generic_string(), c.csv.b.test = std::string(v)),
      VF_KEY("csv.schema_a", false, c.csv.schema_a.generic_string(), c.csv.schema_a = std::string(v)),
      VF_KEY("csv.schema_b", false, c.csv.schema_b.generic_string(), c.csv.schema_b = std::string(v)),
      VF_KEY("csv.label_column", false, c.csv.label_column, c.csv.label_column = std::string(v)),

      VF_KEY("model.bottom_a", true, format_widths(c.arch.bottom_a.hidden), c.arch.bottom_a.hidden = parse_widths(v)),
      VF_KEY("model.bottom_b", true, format_widths(c.arch.bottom_b.hidden), c.arch.bottom_b.hidden = parse_widths(v)),
      VF_KEY("model.top", true, format_widths(c.arch.top.hidden), c.arch.top.hidden = parse_widths(v)),
      VF_KEY("model.bottom_activation", true, activation_text(c.arch.bottom_a.output_activation), {
        c.arch.bottom_a.output_activation = parse_activation(v);
        c.arch.bottom_b.output_activation = c.arch.bottom_a.output_activation;
      }),

      VF_KEY("train.lr", true, format_double(c.lr), c.lr = parse_double(v, "lr")),
      VF_KEY("train.finetune_lr", true, format_double(c.finetune_lr), c.finetune_lr = parse_double(v, "finetune_lr")),
      VF_KEY("train.l2", true, format_double(c.l2), c.l2 = parse_double(v, "l2")),
      VF_KEY("train.beta1", true, format_double(c.beta1), c.beta1 = parse_double(v, "beta1")),
      VF_KEY("train.beta2", true, format_double(c.beta2), c.beta2 = parse_double(v, "beta2")),
      VF_KEY("train.epsilon", true, format_double(c.epsilon), c.epsilon = parse_double(v, "epsilon")),
      VF_KEY("train.batch_size", true, std::to_string(c.batch_size), c.batch_size = parse_count(v, "batch_size")),
      VF_KEY("train.eval_batch_size", true, std::to_string(c.eval_batch_size), c.eval_batch_size = parse_count(v, "eval_batch_size")),
      VF_KEY("train.max_epochs", true, std::to_string(c.max_epochs), c.max_epochs = parse_count(v, "max_epochs")),
      VF_KEY("train.patience", true, std::to_string(c.patience), c.patience = parse_count(v, "patience")),

      VF_KEY("pretrain.epochs", true, std::to_string(c.pretrain_epochs), c.pretrain_epochs = parse_count(v, "epochs")),
      VF_KEY("pretrain.k", true, std::to_string(c.mpd.k), c.mpd.k = parse_count(v, "k")),
      VF_KEY("pretrain.permute", true, std::string(permute_side_name(c.mpd.permute)), c.mpd.permute = parse_permute_side(v)),
      VF_KEY("pretrain.sampling", true, std::string(negative_sampling_name(c.mpd.sampling)), c.mpd.sampling = parse_negative_sampling(v)),
      VF_KEY("pretrain.batch_size", true, std::to_string(c.mpd.batch_size), c.mpd.batch_size = parse_count(v, "batch_size")),

      VF_KEY("distill.alpha", true, format_double(c.alpha), c.alpha = parse_double(v, "alpha")),
      VF_KEY("distill.student_init", true, std::string(student_init_name(c.student_init)), c.student_init = parse_student_init(v)),
      VF_KEY("distill.unlabeled_soft", true, format_bool(c.unlabeled_soft), c.unlabeled_soft = parse_bool(v)),

      VF_KEY("st.finetune", true, format_bool(c.st_finetune), c.st_finetune = parse_bool(v)),
  };
  return table;
}

#undef VF_KEY

const Key& find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return k;
  }
  throw ConfigError("unknown configuration key '" + std::string(name) + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool needs_unlabeled(const ExperimentConfig& c) {
  switch (c.method) {
    case Method::VFL_ST:
    case Method::VFL_MPD:
    case Method::Local_MPD:
    case Method::Local_SSD:
      return true;
    case Method::Local_SD:
      return c.unlabeled_soft;
    default:
      return false;
  }
}

}  // namespace

std::string_view method_name(Method m) { return kMethodNames[static_cast<std::size_t>(m)]; }

Method parse_method(std::string_view name) {
  const std::string n = lower(name);
  for (std::size_t i = 0; i < std::size(kMethodNames); ++i) {
    std::string candidate = lower(kMethodNames[i]);
    std::string dashed = candidate;
    for (char& ch : dashed) {
      if (ch == '_') ch = '-';
    }
    if (n == candidate || n == dashed) return static_cast<Method>(i);
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

bool is_local_method(Method m) {
  return m == Method::BaselineLocal || m == Method::Local_SD || m == Method::Local_MPD || m == Method::Local_SSD;
}

std::string_view transport_name(TransportMode t) { return t == TransportMode::Inproc ? "inproc" : "tcp"; }

TransportMode parse_transport(std::string_view name) {
  const std::string n = lower(name);
  if (n == "inproc") return TransportMode::Inproc;
  if (n == "tcp") return TransportMode::Tcp;
  throw ValidationError("transport must be inproc or tcp, got '" + std::string(name) + "'");
}

std::vector<std::size_t> parse_widths(std::string_view text) {
  std::vector<std::size_t> out;
  const std::string t = lower(text);
  if (t.empty() || t == "none") return out;
  std::size_t start = 0;
  while (start <= t.size()) {
    std::size_t end = t.find(',', start);
    if (end == std::string::npos) end = t.size();
    std::string item = t.substr(start, end - start);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    const auto w = parse_u64(item, "layer width");
    if (w == 0) throw ValidationError("layer widths must be positive");
    out.push_back(static_cast<std::size_t>(w));
    start = end + 1;
  }
  return out;
}

std::string format_widths(const std::vector<std::size_t>& widths) {
  if (widths.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) s += (i ? "," : "") + std::to_string(widths[i]);
  return s;
}

AdamConfig ExperimentConfig::optimizer(double learning_rate) const {
  AdamConfig a;
  a.lr = learning_rate;
  a.l2 = l2;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.epsilon = epsilon;
  return a;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const Key& k = find_key(key);
  try {
    k.set(*this, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

std::string ExperimentConfig::get(std::string_view key) const { return find_key(key).get(*this); }

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

void ExperimentConfig::validate() const {
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(finite_pos(lr), "train.lr must be positive");
  require(finite_pos(finetune_lr), "train.finetune_lr must be positive");
  require(std::isfinite(l2) && l2 >= 0.0, "train.l2 must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0, "train.beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "train.beta2 must lie in [0, 1)");
  require(finite_pos(epsilon), "train.epsilon must be positive");
  require(batch_size >= 2, "train.batch_size must be at least 2");
  require(eval_batch_size >= 1, "train.eval_batch_size must be at least 1");
  require(alpha >= 0.0 && alpha <= 1.0, "distill.alpha must lie in [0, 1]");
  require(mpd.k >= 1, "pretrain.k must be at least 1");
  require(mpd.batch_size >= 2, "pretrain.batch_size must be at least 2");
  require(finite_pos(timeout_seconds), "run.timeout must be positive");
  const bool mpd_method = method == Method::VFL_MPD || method == Method::Local_MPD || method == Method::Local_SSD;
  require(!mpd_method || pretrain_epochs >= 1, std::string(method_name(method)) + " needs pretrain.epochs >= 1");
  if (source == DataSource::Synthetic) {
    try {
      synth.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("synth: ") + e.what());
    }
    require(synth.n_labeled >= 40, "synth.n_labeled must be at least 40 (a validation split is carved out)");
    require(!needs_unlabeled(*this) || synth.n_unlabeled >= 2,
            std::string(method_name(method)) + " requires an unlabeled segment (synth.n_unlabeled)");
  } else {
    require(!csv.schema_a.empty() && !csv.schema_b.empty(), "csv.schema_a and csv.schema_b are required");
    require(!csv.a.labeled.empty() && !csv.b.labeled.empty(), "csv.a_labeled and csv.b_labeled are required");
    require(!needs_unlabeled(*this) || (!csv.a.unlabeled.empty() && !csv.b.unlabeled.empty()),
            std::string(method_name(method)) + " requires an unlabeled segment (csv.a_unlabeled, csv.b_unlabeled)");
  }
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream out;
  std::string section;
  for (const auto& k : key_table()) {
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << k.name.substr(dot + 1) << " = " << k.get(*this) << '\n';
  }
  return out.str();
}

ExperimentConfig ExperimentConfig::from_ini(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("configuration key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) c.set(section + "." + key, value.get_value<std::string>());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return from_ini(s.str());
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_ini();
}

std::uint64_t ExperimentConfig::hash() const {
  Fnv1a64 h;
  for (const auto& k : key_table()) {
    if (!k.shared) continue;
    h.update(k.name).update_byte('=').update(k.get(*this)).update_byte('\n');
  }
  return h.digest();
}

std::uint64_t combined_schema_hash(const PartySchema& a, const PartySchema& b) {
  return Fnv1a64{}.update_u64(a.hash()).update_u64(b.hash()).digest();
}

}  // namespace vfedssd
