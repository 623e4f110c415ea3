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

#include "vfedssd/splitkd/distill.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/transport/handshake.hpp"

namespace vfedssd {

namespace {

constexpr char kMagic[4] = {'V', 'F', 'S', 'L'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(path.string() + ": truncated soft-label file");
  return v;
}

}  // namespace

void SoftLabelCache::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, probabilities.size());
  put<std::uint64_t>(out, teacher_hash);
  out.write(reinterpret_cast<const char*>(probabilities.data()),
            static_cast<std::streamsize>(probabilities.size() * sizeof(float)));
  if (!out) throw DataError("failed writing " + path.string());
}

SoftLabelCache SoftLabelCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError(path.string() + ": not a soft-label file");
  if (get<std::uint32_t>(in, path) != kVersion) throw DataError(path.string() + ": unsupported soft-label version");
  const auto rows = get<std::uint64_t>(in, path);
  if (rows > (std::uint64_t{1} << 32)) throw DataError(path.string() + ": implausible row count");
  SoftLabelCache c;
  c.teacher_hash = get<std::uint64_t>(in, path);
  c.probabilities.resize(rows);
  in.read(reinterpret_cast<char*>(c.probabilities.data()), static_cast<std::streamsize>(rows * sizeof(float)));
  if (!in) throw DataError(path.string() + ": truncated soft-label file");
  return c;
}

float soft_label(float logit) {
  return static_cast<float>(clamp_probability(sigmoid(static_cast<double>(logit))));
}

SoftLabelCache teacher_predict(ActiveParty& teacher, Segment segment, std::size_t batch_size,
                               std::uint64_t teacher_hash) {
  SoftLabelCache c;
  c.teacher_hash = teacher_hash;
  const auto logits = teacher.predict(segment, batch_size);
  c.probabilities.reserve(logits.size());
  for (float z : logits) c.probabilities.push_back(soft_label(z));
  return c;
}

void check_student_schema(const PartySchema& teacher_a, const LocalModel<float>& student) {
  const PartySchema& s = student.bottom().schema();
  if (s.party != Party::A || s.hash() != teacher_a.hash()) {
    throw ConfigError("student schema " + hex64(s.hash()) + " does not match the teacher's party-A schema " +
                      hex64(teacher_a.hash()));
  }
}

double distill_step(LocalModel<float>& student, AdamState& adam, const Matrix& x, std::span<const float> hard,
                    std::span<const float> soft, double alpha) {
  if (soft.size() != x.rows()) {
    throw DataError("soft labels missing from row " + std::to_string(std::min(soft.size(), x.rows())));
  }
  for (std::size_t i = 0; i < soft.size(); ++i) {
    if (!(soft[i] > 0.0f && soft[i] < 1.0f)) throw DataError("row " + std::to_string(i) + " has no usable soft label");
  }
  const Matrix logits = student.forward(x, true);
  const auto loss = distill_loss(logits, hard, soft, alpha);
  if (!std::isfinite(loss.value)) {
    student.bottom().clear_record();
    student.top().clear_record();
    throw DivergenceError("distillation loss became non-finite");
  }
  student.backward(loss.grad);
  adam.step(student.params());
  return loss.value;
}

std::string_view student_init_name(StudentInit s) { return s == StudentInit::Random ? "random" : "pretrained"; }

StudentInit parse_student_init(std::string_view name) {
  if (name == "random") return StudentInit::Random;
  if (name == "pretrained") return StudentInit::PretrainedBottom;
  throw ValidationError("student init must be random or pretrained, got '" + std::string(name) + "'");
}

FitResult distill(LocalModel<float>& student, const ActiveData& data, const SoftLabelCache& train_soft, double alpha,
                  const AdamConfig& optim, std::size_t batch_size, const FitOptions& options) {
  check_student_schema(data.features.schema, student);
  if (train_soft.size() != data.features.train.rows()) {
    throw DataError("soft labels cover " + std::to_string(train_soft.size()) + " rows, training segment has " +
                    std::to_string(data.features.train.rows()));
  }
  LocalLearner::Data d;
  d.train_x = &data.features.train;
  d.train_targets = data.train_y;
  d.train_soft = train_soft.probabilities;
  d.alpha = alpha;
  d.validation_x = &data.features.validation;
  d.validation_y = data.validation_y;
  LocalLearner learner(student, d, optim, batch_size);
  return fit(learner, options);
}

}  // namespace vfedssd
