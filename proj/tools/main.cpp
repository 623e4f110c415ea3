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

// Command-line front end: data generation, single stages, full method runs,
// grid search and the party-B server for two-process runs.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/data/synth.hpp"
#include "vfedssd/harness/experiment.hpp"
#include "vfedssd/harness/grid.hpp"
#include "vfedssd/harness/serve.hpp"
#include "vfedssd/splitnn/checkpoint.hpp"
#include "vfedssd/splitnn/trainer.hpp"

namespace {

using namespace vfedssd;

enum ExitCode { kOk = 0, kFailure = 1, kHandshake = 2, kTransport = 3, kUsage = 64 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string transport;
  std::string method;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::string report_path;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "INI configuration file");
  app->add_option("-s,--set", c.overrides, "Override a key, e.g. --set train.lr=5e-3");
  app->add_option("--transport", c.transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
  app->add_option("--seed", c.seed, "Run seed");
  app->add_flag("-q,--quiet", c.quiet, "Only print the result");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config_path);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    cfg.set(o.substr(0, eq), o.substr(eq + 1));
  }
  if (!c.transport.empty()) cfg.transport = parse_transport(c.transport);
  if (!c.method.empty()) cfg.method = parse_method(c.method);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

RunOptions run_options(const Common& c) {
  RunOptions o;
  o.log = c.quiet ? nullptr : &std::cerr;
  return o;
}

void emit(const std::string& json, const std::string& path) {
  if (path.empty()) {
    std::cout << json << std::endl;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << json << '\n';
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  if (text == "all") return {std::begin(kAllMethods), std::end(kAllMethods)};
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(parse_method(item));
  return out;
}

int report_exit(const RunReport& r) {
  if (r.transport_failure()) return kTransport;
  return r.ok() ? kOk : kFailure;
}

int run_stage(const Common& common, const std::string& stage_name) {
  Experiment e(resolve(common), run_options(common));
  const StageReport& s = e.stage(stage_name);
  e.close();
  std::cout << stage_name << ": best_epoch=" << s.best_epoch;
  if (s.validation_auc) std::cout << " validation_auc=" << *s.validation_auc;
  if (s.test_auc) std::cout << " test_auc=" << *s.test_auc;
  std::cout << " messages=" << s.messages << " artifacts=" << (e.run_dir() / stage_name).string() << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-party vertical split learning with matched-pair pre-training and split distillation"};
  app.require_subcommand(1);

  Common common;

  auto* synth = app.add_subcommand("synth", "Write a synthetic federated dataset as CSV and schema files");
  std::string synth_dir;
  add_common(synth, common);
  synth->add_option("-o,--out", synth_dir, "Output directory")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Matched-pair pre-training of both bottom models");
  add_common(pretrain, common);

  auto* train = app.add_subcommand("train", "Supervised training (local or federated)");
  add_common(train, common);
  train->add_option("-m,--method", common.method, "BaselineLocal, VFL, VFL_ST or VFL_MPD");
  train->add_option("-r,--report", common.report_path, "Write the JSON report here");

  auto* distill_cmd = app.add_subcommand("distill", "Train a party-A student from a federated teacher");
  add_common(distill_cmd, common);
  distill_cmd->add_option("-m,--method", common.method, "Local_SD or Local_SSD")->default_val("Local_SSD");
  distill_cmd->add_option("-r,--report", common.report_path, "Write the JSON report here");

  auto* eval = app.add_subcommand("eval", "Evaluate a party-A model checkpoint on a labeled segment");
  add_common(eval, common);
  std::string ckpt_path;
  std::string segment = "test";
  eval->add_option("--checkpoint", ckpt_path, "Local model checkpoint (model.ckpt)")->required();
  eval->add_option("--segment", segment, "train, validation or test");

  auto* run_cmd = app.add_subcommand("run", "Run method pipelines end to end");
  add_common(run_cmd, common);
  std::string methods_text;
  run_cmd->add_option("-m,--method", common.method, "Single method (defaults to run.method)");
  run_cmd->add_option("--methods", methods_text, "Comma-separated methods or 'all'");
  run_cmd->add_option("-r,--report", common.report_path, "Write the JSON report here");

  auto* grid_cmd = app.add_subcommand("grid", "Hyperparameter grid over three seeds per point");
  add_common(grid_cmd, common);
  std::string grid_path;
  std::vector<std::uint64_t> grid_seeds{1, 2, 3};
  grid_cmd->add_option("--grid", grid_path, "Grid file (default: the learning-rate, L2 and alpha grid)");
  grid_cmd->add_option("--methods", methods_text, "Comma-separated methods or 'all'")->default_val("all");
  grid_cmd->add_option("--seeds", grid_seeds, "Seeds per grid point");
  grid_cmd->add_option("-r,--report", common.report_path, "Write the JSON report here");

  auto* serve = app.add_subcommand("serve-b", "Serve party B for one session over TCP");
  add_common(serve, common);
  ServeOptions serve_options;
  std::optional<std::uint16_t> listen_port;
  serve->add_option("--host", serve_options.host, "Listen address");
  serve->add_option("--port", listen_port, "Listen port (0 picks a free port; default run.port)");
  serve->add_option("--accept-timeout", serve_options.accept_timeout_seconds, "Seconds to wait for party A");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const ExperimentConfig cfg = resolve(common);
      write_synthetic_csv(cfg.synth, cfg.synth_seed, synth_dir);
      std::cout << "wrote " << synth_dir << std::endl;
      return kOk;
    }
    if (pretrain->parsed()) {
      Common c = common;
      c.overrides.insert(c.overrides.begin(), "run.method=VFL_MPD");
      return run_stage(c, "mpd-pretrain");
    }
    if (train->parsed() || distill_cmd->parsed() || run_cmd->parsed()) {
      const ExperimentConfig cfg = resolve(common);
      std::vector<Method> methods = methods_text.empty() ? std::vector<Method>{cfg.method} : parse_methods(methods_text);
      if (train->parsed() && (is_local_method(cfg.method) && cfg.method != Method::BaselineLocal)) {
        throw ConfigError("train runs BaselineLocal, VFL, VFL_ST or VFL_MPD; use distill or run for " +
                          std::string(method_name(cfg.method)));
      }
      if (distill_cmd->parsed() && cfg.method != Method::Local_SD && cfg.method != Method::Local_SSD) {
        throw ConfigError("distill runs Local_SD or Local_SSD");
      }
      const RunReport report = run_matrix(cfg, methods, run_options(common));
      emit(report.to_json(), common.report_path);
      return report_exit(report);
    }
    if (eval->parsed()) {
      const ExperimentConfig cfg = resolve(common);
      const auto [schema_a, schema_b] = load_schemas(cfg);
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      if (ckpt.has_prefix("bottom_b")) throw ConfigError("checkpoint holds party-B parameters; not a local model");
      if (ckpt.schema_hash != schema_a.hash()) throw ConfigError("checkpoint was trained on a different party-A schema");
      LocalModel<float> model(schema_a, cfg.arch.bottom_a, cfg.arch.top, "bottom_a");
      apply_checkpoint(ckpt, model.params());
      const PartyTable a = load_party(cfg, Party::A);
      const ActiveData data = make_active_data(a, validation_split(cfg, a.labeled.rows()));
      const Segment seg = parse_segment(segment);
      const auto logits = predict_local(model, data.features.segment(seg), cfg.eval_batch_size);
      const double value = auc<float, float>(logits, data.labels(seg)).auc;
      std::cout << "segment=" << segment << " rows=" << logits.size() << " auc=" << value << " messages=0"
                << std::endl;
      return kOk;
    }
    if (grid_cmd->parsed()) {
      const ExperimentConfig cfg = resolve(common);
      GridSpec spec = GridSpec::standard();
      if (!grid_path.empty()) {
        std::ifstream in(grid_path);
        if (!in) throw ConfigError("cannot read grid " + grid_path);
        std::ostringstream s;
        s << in.rdbuf();
        spec = GridSpec::parse(s.str());
      }
      std::vector<Method> methods = parse_methods(methods_text);
      if (std::find(methods.begin(), methods.end(), Method::BaselineLocal) == methods.end()) {
        methods.insert(methods.begin(), Method::BaselineLocal);
      }
      RunOptions o = run_options(common);
      const GridReport report = grid(cfg, spec, methods, grid_seeds, o);
      emit(report.to_json(), common.report_path);
      return kOk;
    }
    if (serve->parsed()) {
      const ExperimentConfig cfg = resolve(common);
      serve_options.port = listen_port.value_or(cfg.port);
      serve_options.log = common.quiet ? nullptr : &std::cerr;
      serve_options.on_listening = [&](std::uint16_t port) {
        std::cout << "listening " << serve_options.host << ":" << port << std::endl;
      };
      serve_party_b(cfg, serve_options);
      return kOk;
    }
  } catch (const HandshakeError& e) {
    std::cerr << "handshake error: " << e.what() << std::endl;
    return kHandshake;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << std::endl;
    return kTransport;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kFailure;
  }
  return kOk;
}
