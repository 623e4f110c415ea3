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

#include "vfedssd/harness/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"
#include "vfedssd/data/loader.hpp"
#include "vfedssd/data/synth.hpp"
#include "vfedssd/mpd/mpd.hpp"
#include "vfedssd/splitnn/checkpoint.hpp"

namespace vfedssd {

namespace {

std::string format_auc(std::optional<double> v) {
  if (!v) return "-";
  std::ostringstream s;
  s.precision(5);
  s << std::fixed << *v;
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Stages each stage needs to have completed first.
std::vector<std::string> dependencies(const std::string& stage, const ExperimentConfig& c) {
  if (stage == "vfl-soft-unlabeled" || stage == "vfl-soft-train") return {"vfl"};
  if (stage == "st-soft") return {"vfl-soft-unlabeled"};
  if (stage == "st-finetune") return {"st-soft"};
  if (stage == "finetune" || stage == "local-mpd") return {"mpd-pretrain"};
  if (stage == "finetune-soft-train" || stage == "finetune-soft-unlabeled") return {"finetune"};
  if (stage == "local-sd") {
    std::vector<std::string> d{"vfl-soft-train"};
    if (c.unlabeled_soft) d.push_back("vfl-soft-unlabeled");
    return d;
  }
  if (stage == "local-ssd") {
    std::vector<std::string> d{"finetune-soft-train"};
    if (c.unlabeled_soft) d.push_back("finetune-soft-unlabeled");
    if (c.student_init == StudentInit::PretrainedBottom) d.push_back("mpd-pretrain");
    return d;
  }
  return {};
}

}  // namespace

std::pair<PartySchema, PartySchema> load_schemas(const ExperimentConfig& config) {
  if (config.source == DataSource::Csv) {
    auto a = PartySchema::load(config.csv.schema_a);
    auto b = PartySchema::load(config.csv.schema_b);
    if (a.party != Party::A || b.party != Party::B) throw ConfigError("schema files must declare parties A and B");
    return {std::move(a), std::move(b)};
  }
  SyntheticSpec probe = config.synth;
  probe.n_labeled = 40;
  probe.n_unlabeled = 0;
  probe.n_test = 0;
  const auto ds = synth_federated(probe, config.synth_seed);
  return {ds.schema_a, ds.schema_b};
}

PartyTable load_party(const ExperimentConfig& config, Party party) {
  if (config.source == DataSource::Synthetic) {
    return party_table(synth_federated(config.synth, config.synth_seed), party);
  }
  const auto [schema_a, schema_b] = load_schemas(config);
  if (party == Party::A) return load_party_csv(schema_a, config.csv.a, config.csv.label_column);
  return load_party_csv(schema_b, config.csv.b, "");
}

ValidationSplit validation_split(const ExperimentConfig& config, std::size_t n_labeled) {
  return split_validation(n_labeled, derive_seed(config.seed, "validation"));
}

HandshakeInfo hello_for(const ExperimentConfig& config, const PartySchema& a, const PartySchema& b) {
  HandshakeInfo h;
  h.schema_hash = combined_schema_hash(a, b);
  h.config_hash = config.hash();
  h.d_a = static_cast<std::uint32_t>(bottom_out_dim(a, config.arch.bottom_a));
  h.d_b = static_cast<std::uint32_t>(bottom_out_dim(b, config.arch.bottom_b));
  h.batch_size = static_cast<std::uint32_t>(config.batch_size);
  h.pretrain_batch_size = static_cast<std::uint32_t>(config.mpd.batch_size);
  return h;
}

std::filesystem::path run_directory(const ExperimentConfig& config) {
  return config.artifacts / hex64(config.hash());
}

std::vector<std::string> method_stages(Method method, const ExperimentConfig& c) {
  switch (method) {
    case Method::BaselineLocal:
      return {"local"};
    case Method::VFL:
      return {"vfl"};
    case Method::VFL_ST: {
      std::vector<std::string> s{"vfl", "vfl-soft-unlabeled", "st-soft"};
      if (c.st_finetune) s.push_back("st-finetune");
      return s;
    }
    case Method::VFL_MPD:
      return {"mpd-pretrain", "finetune"};
    case Method::Local_SD: {
      std::vector<std::string> s{"vfl", "vfl-soft-train"};
      if (c.unlabeled_soft) s.push_back("vfl-soft-unlabeled");
      s.push_back("local-sd");
      return s;
    }
    case Method::Local_MPD:
      return {"mpd-pretrain", "local-mpd"};
    case Method::Local_SSD: {
      std::vector<std::string> s{"mpd-pretrain", "finetune", "finetune-soft-train"};
      if (c.unlabeled_soft) s.push_back("finetune-soft-unlabeled");
      s.push_back("local-ssd");
      return s;
    }
  }
  return {};
}

// ---------------------------------------------------------------- session

Experiment::Experiment(ExperimentConfig config, RunOptions options)
    : config_(std::move(config)), options_(options) {
  config_.validate();
  run_dir_ = run_directory(config_);
  std::tie(schema_a_, schema_b_) = load_schemas(config_);
  const HandshakeInfo hello = hello_for(config_, schema_a_, schema_b_);
  if (options_.write_artifacts) config_.save(run_dir_ / "config.ini");

  if (config_.transport == TransportMode::Inproc) {
    PartyTable a;
    PartyTable b;
    if (config_.source == DataSource::Synthetic) {
      const auto ds = synth_federated(config_.synth, config_.synth_seed);
      a = party_table(ds, Party::A);
      b = party_table(ds, Party::B);
    } else {
      a = load_party(config_, Party::A);
      b = load_party(config_, Party::B);
    }
    if (a.labeled.rows() != b.labeled.rows() || a.unlabeled.rows() != b.unlabeled.rows() ||
        a.test.rows() != b.test.rows()) {
      throw AlignmentError("party tables are not row-aligned");
    }
    const auto split = validation_split(config_, a.labeled.rows());
    inproc_ = std::make_unique<InprocFederation>(make_active_data(a, split), make_passive_data(b, split), config_.arch,
                                                 options_.write_artifacts ? run_dir_ : std::filesystem::path{}, hello);
    inproc_->active_channel().set_timeout(Millis(static_cast<long long>(config_.timeout_seconds * 1000)));
    session_ = handshake(inproc_->active_channel(), Role::Active, hello);
    active_ = &inproc_->active();
  } else {
    const PartyTable a = load_party(config_, Party::A);
    const auto split = validation_split(config_, a.labeled.rows());
    const Millis timeout(static_cast<long long>(config_.timeout_seconds * 1000));
    tcp_channel_ = tcp_connect(config_.host, config_.port, timeout);
    tcp_channel_->set_timeout(timeout);
    session_ = handshake(*tcp_channel_, Role::Active, hello);
    tcp_active_ = std::make_unique<ActiveParty>(make_active_data(a, split), config_.arch, hello.d_b, *tcp_channel_);
    active_ = tcp_active_.get();
  }
  log("session established: config_hash=" + hex64(session_.local.config_hash) +
      " peer_config_hash=" + hex64(session_.peer.config_hash) + " schema_hash=" + hex64(session_.local.schema_hash));
}

Experiment::~Experiment() {
  try {
    close();
  } catch (...) {
  }
}

void Experiment::close() {
  if (closed_) return;
  closed_ = true;
  if (inproc_) {
    inproc_->finish();
  } else if (tcp_channel_) {
    if (!transport_failed_) {
      try {
        active_->bye();
      } catch (const TransportError&) {
      }
    }
    tcp_channel_->close();
  }
}

PassiveParty& Experiment::passive() {
  if (!inproc_) throw StateError("party B runs in another process");
  return inproc_->passive();
}

void Experiment::log(const std::string& line) {
  if (options_.log != nullptr) *options_.log << line << std::endl;
}

std::uint64_t Experiment::stage_seed(const std::string& tag) const { return derive_seed(config_.seed, tag); }

std::uint64_t Experiment::tag_hash(const std::string& stage) const {
  return Fnv1a64{}.update_u64(config_.hash()).update(stage).digest();
}

LocalModel<float>& Experiment::local_model(const std::string& stage) {
  auto it = local_models_.find(stage);
  if (it == local_models_.end()) throw StateError("no local model for stage '" + stage + "'");
  return it->second;
}

const SoftLabelCache& Experiment::soft_labels(const std::string& stage) const {
  auto it = soft_labels_.find(stage);
  if (it == soft_labels_.end()) throw StateError("no soft labels for stage '" + stage + "'");
  return it->second;
}

const StageReport& Experiment::stage(const std::string& name) {
  if (auto it = stages_.find(name); it != stages_.end()) {
    if (!it->second.ok) throw StateError("stage " + name + " failed: " + it->second.error);
    return it->second;
  }
  for (const auto& dep : dependencies(name, config_)) stage(dep);

  StageReport r;
  r.name = name;
  const bool local_only = name == "local";
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t m0 = 0;
  std::uint64_t b0 = 0;
  const std::size_t l0 = active_->labels_read();
  try {
    if (closed_) throw StateError("session already closed");
    if (transport_failed_ && !local_only) throw TransportError("session with party B was lost");
    if (!transport_failed_) {
      const auto st = active_->channel().stats();
      m0 = st.messages();
      b0 = st.bytes();
    }
    log("[" + name + "] start");
    if (name == "local") {
      run_local(r);
    } else if (name == "vfl") {
      run_vfl(r);
    } else if (name == "vfl-soft-unlabeled") {
      run_soft_labels(r, "vfl", Segment::Unlabeled);
    } else if (name == "vfl-soft-train") {
      run_soft_labels(r, "vfl", Segment::Train);
    } else if (name == "finetune-soft-train") {
      run_soft_labels(r, "finetune", Segment::Train);
    } else if (name == "finetune-soft-unlabeled") {
      run_soft_labels(r, "finetune", Segment::Unlabeled);
    } else if (name == "st-soft") {
      run_st_soft(r);
    } else if (name == "st-finetune") {
      run_st_finetune(r);
    } else if (name == "mpd-pretrain") {
      run_mpd_pretrain(r);
    } else if (name == "finetune") {
      run_finetune(r);
    } else if (name == "local-mpd") {
      run_local_mpd(r);
    } else if (name == "local-sd") {
      run_distill(r, "vfl", false);
    } else if (name == "local-ssd") {
      run_distill(r, "finetune", config_.student_init == StudentInit::PretrainedBottom);
    } else {
      throw ConfigError("unknown stage '" + name + "'");
    }
  } catch (const Error& e) {
    if (dynamic_cast<const TransportError*>(&e) != nullptr) {
      transport_failed_ = true;
      r.transport_failure = true;
    }
    r.ok = false;
    r.error = e.what();
    log("[" + name + "] failed: " + r.error);
  }
  if (!transport_failed_) {
    const auto st = active_->channel().stats();
    r.messages = st.messages() - m0;
    r.bytes = st.bytes() - b0;
  }
  r.labels_read = active_->labels_read() - l0;
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.ok) {
    log("[" + name + "] done: val_auc=" + format_auc(r.validation_auc) + " test_auc=" + format_auc(r.test_auc) +
        " messages=" + std::to_string(r.messages));
  }
  stage_order_.push_back(name);
  const auto& stored = stages_.insert_or_assign(name, std::move(r)).first->second;
  if (!stored.ok) throw StateError("stage " + name + " failed: " + stored.error);
  return stored;
}

RunReport Experiment::run(std::span<const Method> methods) {
  std::vector<Method> order(methods.begin(), methods.end());

  auto run_method = [&](Method m) {
    MethodReport mr;
    mr.method = m;
    mr.stages = method_stages(m, config_);
    ExperimentConfig check = config_;
    check.method = m;
    try {
      check.validate();
    } catch (const ConfigError& e) {
      mr.ok = false;
      mr.failed_stage = "config";
      mr.error = e.what();
      return mr;
    }
    for (const auto& s : mr.stages) {
      try {
        stage(s);
      } catch (const Error&) {
      }
      const StageReport& sr = stages_.at(s);
      if (!sr.ok) {
        mr.ok = false;
        mr.failed_stage = s;
        mr.error = sr.error;
        break;
      }
      mr.messages += sr.messages;
      mr.bytes += sr.bytes;
    }
    if (mr.ok) {
      const StageReport& last = stages_.at(mr.stages.back());
      mr.test_auc = last.test_auc;
      mr.validation_auc = last.validation_auc;
      mr.inference_messages = last.inference_messages;
    }
    return mr;
  };

  MethodReport baseline = run_method(Method::BaselineLocal);
  RunReport report;
  report.config_hash = hex64(config_.hash());
  report.seed = config_.seed;
  report.transport = config_.transport;
  for (Method m : order) {
    MethodReport mr = m == Method::BaselineLocal ? baseline : run_method(m);
    if (mr.test_auc && baseline.test_auc) mr.improvement = *mr.test_auc - *baseline.test_auc;
    report.methods.push_back(std::move(mr));
  }
  for (const auto& name : stage_order_) report.stages.push_back(stages_.at(name));
  if (options_.write_artifacts) report.save(run_dir_ / "report.json");
  return report;
}

// ---------------------------------------------------------------- helpers

FitOptions Experiment::fit_options(const std::string& stage, std::size_t max_epochs) {
  FitOptions o;
  o.stage = stage;
  o.max_epochs = max_epochs;
  o.patience = config_.patience;
  o.seed = stage_seed(stage);
  o.on_epoch = [this, stage](const EpochRecord& e) {
    std::ostringstream s;
    s << "[" << stage << "] epoch " << e.epoch << " loss=" << e.train_loss;
    if (e.train_accuracy) s << " acc=" << *e.train_accuracy;
    s << " val_auc=" << format_auc(e.validation_auc);
    log(s.str());
  };
  return o;
}

void Experiment::save_federated(const std::string& stage) {
  if (options_.write_artifacts) active_->save(run_dir_, stage, tag_hash(stage));
}

void Experiment::save_local(const std::string& stage) {
  if (!options_.write_artifacts) return;
  auto& model = local_model(stage);
  save_checkpoint(run_dir_ / stage / "model.ckpt", capture(model.params(), schema_a_.hash(), tag_hash(stage)));
}

void Experiment::record_history(const std::string& stage, const FitResult& fit, StageReport& r) {
  r.history = fit.history;
  r.best_epoch = fit.best_epoch;
  if (fit.best_epoch > 0) r.validation_auc = fit.history.epochs[fit.best_epoch - 1].validation_auc;
  if (options_.write_artifacts) write_text(run_dir_ / stage / "metrics.jsonl", fit.history.to_jsonl());
}

LocalModel<float> Experiment::fresh_local_model() const {
  LocalModel<float> model(schema_a_, config_.arch.bottom_a, config_.arch.top, "bottom_a");
  Rng rb(stage_seed("local.bottom"));
  Rng rt(stage_seed("local.top"));
  model.init(rb, rt);
  return model;
}

void Experiment::federated_test(StageReport& r) {
  if (active_->data().features.rows(Segment::Test) == 0) return;
  const std::uint64_t m0 = active_->channel().stats().messages();
  r.test_auc = federated_auc(*active_, Segment::Test, config_.eval_batch_size);
  r.inference_messages = active_->channel().stats().messages() - m0;
}

void Experiment::local_test(StageReport& r, LocalModel<float>& model) {
  const Matrix& x = active_->data().features.test;
  if (x.rows() == 0) return;
  const std::uint64_t m0 = transport_failed_ ? 0 : active_->channel().stats().messages();
  const auto logits = predict_local(model, x, config_.eval_batch_size);
  r.test_auc = auc<float, float>(logits, active_->read_labels(Segment::Test)).auc;
  r.inference_messages = (transport_failed_ ? 0 : active_->channel().stats().messages()) - m0;
}

// Stage ordering inside a stage body: install the starting parameters,
// set the optimizer, fit, keep the result under the stage's tag, test.

void Experiment::run_local(StageReport& r) {
  auto& model = local_models_.insert_or_assign(r.name, fresh_local_model()).first->second;
  LocalLearner::Data d;
  d.train_x = &active_->data().features.train;
  d.train_targets = active_->read_labels(Segment::Train);
  d.validation_x = &active_->data().features.validation;
  d.validation_y = active_->read_labels(Segment::Validation);
  LocalLearner learner(model, d, config_.optimizer(config_.lr), config_.batch_size);
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.seed = stage_seed("local");
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  save_local(r.name);
  local_test(r, model);
}

void Experiment::run_vfl(StageReport& r) {
  active_->init(stage_seed("vfl"));
  active_->set_optimizer(config_.optimizer(config_.lr));
  FederatedLearner learner(*active_, Segment::Train, active_->read_labels(Segment::Train), config_.batch_size,
                           config_.eval_batch_size);
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.on_epoch = [this, inner = opts.on_epoch, name = r.name](const EpochRecord& e) {
    inner(e);
    save_federated(name);
  };
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  active_->stash("vfl");
  save_federated(r.name);
  federated_test(r);
}

void Experiment::run_soft_labels(StageReport& r, const std::string& teacher_tag, Segment segment) {
  active_->load(teacher_tag);
  const std::uint64_t before = params_digest(active_->params());
  SoftLabelCache cache = teacher_predict(*active_, segment, config_.eval_batch_size, tag_hash(teacher_tag));
  if (params_digest(active_->params()) != before) throw StateError("teacher parameters changed during prediction");
  if (options_.write_artifacts) cache.save(run_dir_ / r.name / "soft_labels.bin");
  soft_labels_.insert_or_assign(r.name, std::move(cache));
}

void Experiment::run_st_soft(StageReport& r) {
  active_->init(stage_seed("st"));
  active_->set_optimizer(config_.optimizer(config_.lr));
  const SoftLabelCache& soft = soft_labels("vfl-soft-unlabeled");
  FederatedLearner learner(*active_, Segment::Unlabeled, soft.probabilities, config_.batch_size,
                           config_.eval_batch_size);
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.on_epoch = [this, inner = opts.on_epoch, name = r.name](const EpochRecord& e) {
    inner(e);
    save_federated(name);
  };
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  active_->stash("st-soft");
  save_federated(r.name);
  federated_test(r);
}

void Experiment::run_st_finetune(StageReport& r) {
  active_->load("st-soft");
  active_->set_optimizer(config_.optimizer(config_.finetune_lr));
  FederatedLearner learner(*active_, Segment::Train, active_->read_labels(Segment::Train), config_.batch_size,
                           config_.eval_batch_size);
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.on_epoch = [this, inner = opts.on_epoch, name = r.name](const EpochRecord& e) {
    inner(e);
    save_federated(name);
  };
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  active_->stash("st-finetune");
  save_federated(r.name);
  federated_test(r);
}

void Experiment::run_mpd_pretrain(StageReport& r) {
  active_->init(stage_seed("mpd"));
  active_->set_optimizer(config_.optimizer(config_.lr));
  MpdLearner learner(*active_, config_.mpd);
  auto opts = fit_options(r.name, config_.pretrain_epochs);
  opts.on_epoch = [this, inner = opts.on_epoch, name = r.name](const EpochRecord& e) {
    inner(e);
    save_federated(name);
  };
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  active_->stash("mpd");
  save_federated(r.name);
}

void Experiment::run_finetune(StageReport& r) {
  active_->load("mpd");
  active_->init_top(stage_seed("finetune.top"));
  active_->set_optimizer(config_.optimizer(config_.finetune_lr));
  FederatedLearner learner(*active_, Segment::Train, active_->read_labels(Segment::Train), config_.batch_size,
                           config_.eval_batch_size);
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.on_epoch = [this, inner = opts.on_epoch, name = r.name](const EpochRecord& e) {
    inner(e);
    save_federated(name);
  };
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  active_->stash("finetune");
  save_federated(r.name);
  federated_test(r);
}

void Experiment::run_local_mpd(StageReport& r) {
  LocalModel<float> start = fresh_local_model();
  start.bottom() = active_->stashed_bottom("mpd");
  auto& model = local_models_.insert_or_assign(r.name, std::move(start)).first->second;
  LocalLearner::Data d;
  d.train_x = &active_->data().features.train;
  d.train_targets = active_->read_labels(Segment::Train);
  d.validation_x = &active_->data().features.validation;
  d.validation_y = active_->read_labels(Segment::Validation);
  LocalLearner learner(model, d, config_.optimizer(config_.finetune_lr), config_.batch_size);
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.seed = stage_seed("local");
  const FitResult fit_result = fit(learner, opts);
  record_history(r.name, fit_result, r);
  save_local(r.name);
  local_test(r, model);
}

void Experiment::run_distill(StageReport& r, const std::string& teacher, bool from_pretrained) {
  LocalModel<float> start = fresh_local_model();
  if (from_pretrained) start.bottom() = active_->stashed_bottom("mpd");
  auto& model = local_models_.insert_or_assign(r.name, std::move(start)).first->second;
  check_student_schema(active_->data().features.schema, model);
  const double lr = from_pretrained ? config_.finetune_lr : config_.lr;

  if (config_.unlabeled_soft) {
    const SoftLabelCache& soft = soft_labels(teacher + "-soft-unlabeled");
    LocalLearner::Data d;
    d.train_x = &active_->data().features.unlabeled;
    d.train_targets = soft.probabilities;
    d.validation_x = &active_->data().features.validation;
    d.validation_y = active_->read_labels(Segment::Validation);
    LocalLearner learner(model, d, config_.optimizer(lr), config_.batch_size);
    auto opts = fit_options(r.name + "-unlabeled", config_.max_epochs);
    const FitResult pre = fit(learner, opts);
    if (options_.write_artifacts) write_text(run_dir_ / r.name / "unlabeled_metrics.jsonl", pre.history.to_jsonl());
  }

  const SoftLabelCache& soft = soft_labels(teacher + "-soft-train");
  auto opts = fit_options(r.name, config_.max_epochs);
  opts.seed = stage_seed("local");
  // distill() reads the training and validation labels through the data
  // view; count them like every other labeled stage.
  active_->read_labels(Segment::Train);
  active_->read_labels(Segment::Validation);
  const FitResult fit_result =
      distill(model, active_->data(), soft, config_.alpha, config_.optimizer(lr), config_.batch_size, opts);
  record_history(r.name, fit_result, r);
  save_local(r.name);
  local_test(r, model);
}

// ---------------------------------------------------------------- entry points

RunReport run(const ExperimentConfig& config, RunOptions options) {
  const Method m[] = {config.method};
  return run_matrix(config, m, options);
}

RunReport run_matrix(const ExperimentConfig& config, std::span<const Method> methods, RunOptions options) {
  Experiment e(config, options);
  RunReport report = e.run(methods);
  e.close();
  return report;
}

}  // namespace vfedssd
