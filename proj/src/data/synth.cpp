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

#include "vfedssd/data/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/hash.hpp"
#include "vfedssd/common/rng.hpp"
#include "vfedssd/data/csv.hpp"
#include "vfedssd/data/encoder.hpp"

namespace vfedssd {

std::string_view label_rule_name(LabelRule r) {
  switch (r) {
    case LabelRule::AOnly: return "a-only";
    case LabelRule::BOnly: return "b-only";
    case LabelRule::Xor: return "xor";
    case LabelRule::Additive: return "additive";
  }
  return "?";
}

LabelRule parse_label_rule(std::string_view name) {
  for (LabelRule r : {LabelRule::AOnly, LabelRule::BOnly, LabelRule::Xor, LabelRule::Additive}) {
    if (label_rule_name(r) == name) return r;
  }
  throw ConfigError("unknown label rule '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (numerical_a + categorical_a == 0 || numerical_b + categorical_b == 0) {
    throw ValidationError("each party needs at least one feature");
  }
  if (latent_dim == 0) throw ValidationError("latent_dim must be positive");
  if (!(shared >= 0.0 && shared <= 1.0)) throw ValidationError("shared must lie in [0, 1]");
  if (feature_noise < 0.0 || label_noise < 0.0) throw ValidationError("noise levels must be non-negative");
  if ((categorical_a + categorical_b) > 0 && (cardinality < 2 || buckets < 2 || embed_dim < 1)) {
    throw ValidationError("categorical fields need cardinality >= 2, buckets >= 2, embed_dim >= 1");
  }
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
    throw ValidationError("positive rate " + std::to_string(positive_rate) + " is infeasible: must lie in (0, 1)");
  }
  for (std::size_t n : {n_labeled, n_test}) {
    if (n == 0) continue;
    const double pos = positive_rate * static_cast<double>(n);
    if (pos < 1.0 || static_cast<double>(n) - pos < 1.0) {
      throw ValidationError("positive rate " + std::to_string(positive_rate) + " is infeasible for a segment of " +
                            std::to_string(n) + " rows");
    }
  }
  if (n_labeled == 0) throw ValidationError("n_labeled must be positive");
}

std::string SyntheticSpec::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "numerical_a=" << numerical_a << " numerical_b=" << numerical_b << " categorical_a=" << categorical_a
      << " categorical_b=" << categorical_b << " cardinality=" << cardinality << " buckets=" << buckets
      << " embed_dim=" << embed_dim << " latent_dim=" << latent_dim << " shared=" << shared
      << " feature_noise=" << feature_noise << " label_noise=" << label_noise << " rule=" << label_rule_name(rule)
      << " n_labeled=" << n_labeled << " n_unlabeled=" << n_unlabeled << " n_test=" << n_test
      << " positive_rate=" << positive_rate;
  return out.str();
}

namespace {

struct PartyRaw {
  std::vector<double> numerical;  // n x numerical
  std::vector<std::size_t> bins;  // n x categorical
};

struct RawSamples {
  std::size_t n = 0;
  PartyRaw a;
  PartyRaw b;
  std::vector<float> y;
};

std::vector<double> random_unit_rows(Rng& rng, std::size_t rows, std::size_t dim) {
  std::vector<double> out(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      out[r * dim + c] = rng.normal();
      norm += out[r * dim + c] * out[r * dim + c];
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (std::size_t c = 0; c < dim; ++c) out[r * dim + c] /= norm;
  }
  return out;
}

double dot(const double* a, const std::vector<double>& z) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += a[i] * z[i];
  return s;
}

void emit_party(const SyntheticSpec& spec, std::size_t n_num, std::size_t n_cat, const std::vector<double>& proj,
                const std::vector<double>& cat_dirs, const std::vector<double>& z, Rng& rng, PartyRaw& out) {
  const std::size_t q = spec.latent_dim;
  const double scale = 1.0 / std::sqrt(1.0 + spec.feature_noise * spec.feature_noise);
  for (std::size_t j = 0; j < n_num; ++j) {
    const double v = dot(proj.data() + j * q, z) + spec.feature_noise * rng.normal();
    out.numerical.push_back(v * scale);
  }
  for (std::size_t j = 0; j < n_cat; ++j) {
    const double t = dot(cat_dirs.data() + j * q, z) + spec.feature_noise * rng.normal();
    const double u = 0.5 * std::erfc(-(t * scale) / std::sqrt(2.0));
    const auto card = spec.cardinality;
    out.bins.push_back(std::min(card - 1, static_cast<std::size_t>(u * static_cast<double>(card))));
  }
}

RawSamples generate(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t q = spec.latent_dim;
  Rng structure(derive_seed(seed, "synth/structure"));
  const auto proj_a = random_unit_rows(structure, spec.numerical_a, q);
  const auto proj_b = random_unit_rows(structure, spec.numerical_b, q);
  const auto cat_a = random_unit_rows(structure, spec.categorical_a, q);
  const auto cat_b = random_unit_rows(structure, spec.categorical_b, q);

  Rng rng(derive_seed(seed, "synth/samples"));
  RawSamples raw;
  raw.n = spec.n_labeled + spec.n_unlabeled + spec.n_test;
  std::vector<double> scores(raw.n);
  const double ws = std::sqrt(spec.shared);
  const double wp = std::sqrt(1.0 - spec.shared);
  std::vector<double> s(q), za(q), zb(q);
  for (std::size_t i = 0; i < raw.n; ++i) {
    for (std::size_t k = 0; k < q; ++k) s[k] = rng.normal();
    for (std::size_t k = 0; k < q; ++k) za[k] = ws * s[k] + wp * rng.normal();
    for (std::size_t k = 0; k < q; ++k) zb[k] = ws * s[k] + wp * rng.normal();
    emit_party(spec, spec.numerical_a, spec.categorical_a, proj_a, cat_a, za, rng, raw.a);
    emit_party(spec, spec.numerical_b, spec.categorical_b, proj_b, cat_b, zb, rng, raw.b);
    double score = 0.0;
    switch (spec.rule) {
      case LabelRule::AOnly: score = za[0]; break;
      case LabelRule::BOnly: score = zb[0]; break;
      case LabelRule::Additive: score = za[0] + zb[0]; break;
      case LabelRule::Xor: score = -za[0] * zb[0]; break;
    }
    scores[i] = score + spec.label_noise * rng.normal();
  }

  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const auto positives = static_cast<std::size_t>(std::llround(spec.positive_rate * static_cast<double>(raw.n)));
  const double threshold = sorted[raw.n - positives - 1];
  raw.y.resize(raw.n);
  for (std::size_t i = 0; i < raw.n; ++i) raw.y[i] = scores[i] > threshold ? 1.0f : 0.0f;
  return raw;
}

PartySchema synth_schema(const SyntheticSpec& spec, Party party) {
  PartySchema schema;
  schema.party = party;
  const std::string prefix = party == Party::A ? "a_" : "b_";
  const std::size_t n_num = party == Party::A ? spec.numerical_a : spec.numerical_b;
  const std::size_t n_cat = party == Party::A ? spec.categorical_a : spec.categorical_b;
  for (std::size_t j = 0; j < n_num; ++j) schema.fields.push_back(FieldSpec::numerical(prefix + "num" + std::to_string(j)));
  for (std::size_t j = 0; j < n_cat; ++j) {
    schema.fields.push_back(FieldSpec::categorical(prefix + "cat" + std::to_string(j), spec.buckets, spec.embed_dim));
  }
  return schema;
}

std::string bin_value(std::size_t bin) { return "v" + std::to_string(bin); }

Matrix encode_party(const PartySchema& schema, const PartyRaw& raw, std::size_t n_num, std::size_t n_cat,
                    std::size_t begin, std::size_t end) {
  Matrix m(end - begin, schema.width());
  for (std::size_t i = begin; i < end; ++i) {
    auto row = m.row(i - begin);
    for (std::size_t j = 0; j < n_num; ++j) row[j] = static_cast<float>(raw.numerical[i * n_num + j]);
    for (std::size_t j = 0; j < n_cat; ++j) {
      row[n_num + j] = static_cast<float>(hash_feature(schema.fields[n_num + j], bin_value(raw.bins[i * n_cat + j])));
    }
  }
  return m;
}

}  // namespace

PartitionedDataset synth_federated(const SyntheticSpec& spec, std::uint64_t seed) {
  const RawSamples raw = generate(spec, seed);
  PartitionedDataset ds;
  ds.schema_a = synth_schema(spec, Party::A);
  ds.schema_b = synth_schema(spec, Party::B);
  const std::size_t l_end = spec.n_labeled;
  const std::size_t u_end = l_end + spec.n_unlabeled;
  const std::size_t t_end = u_end + spec.n_test;
  auto enc_a = [&](std::size_t b, std::size_t e) {
    return encode_party(ds.schema_a, raw.a, spec.numerical_a, spec.categorical_a, b, e);
  };
  auto enc_b = [&](std::size_t b, std::size_t e) {
    return encode_party(ds.schema_b, raw.b, spec.numerical_b, spec.categorical_b, b, e);
  };
  ds.labeled = {enc_a(0, l_end), enc_b(0, l_end), std::vector<float>(raw.y.begin(), raw.y.begin() + l_end)};
  ds.unlabeled = {enc_a(l_end, u_end), enc_b(l_end, u_end)};
  ds.test = {enc_a(u_end, t_end), enc_b(u_end, t_end),
             std::vector<float>(raw.y.begin() + u_end, raw.y.begin() + t_end)};
  ds.validate();
  return ds;
}

void write_synthetic_csv(const SyntheticSpec& spec, std::uint64_t seed, const std::filesystem::path& dir) {
  const RawSamples raw = generate(spec, seed);
  std::filesystem::create_directories(dir);
  const PartySchema sa = synth_schema(spec, Party::A);
  const PartySchema sb = synth_schema(spec, Party::B);
  sa.save(dir / "schema_a.txt");
  sb.save(dir / "schema_b.txt");

  auto write_party = [&](const PartySchema& schema, const PartyRaw& p, std::size_t n_num, std::size_t n_cat,
                         const std::string& stem, std::size_t begin, std::size_t end, bool with_label) {
    CsvTable t;
    for (const auto& f : schema.fields) t.header.push_back(f.name);
    if (with_label) t.header.push_back("label");
    char buf[64];
    for (std::size_t i = begin; i < end; ++i) {
      std::vector<std::string> row;
      for (std::size_t j = 0; j < n_num; ++j) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), p.numerical[i * n_num + j]);
        row.emplace_back(buf, res.ptr);
      }
      for (std::size_t j = 0; j < n_cat; ++j) row.push_back(bin_value(p.bins[i * n_cat + j]));
      if (with_label) row.push_back(raw.y[i] > 0.5f ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
    write_csv(dir / (stem + ".csv"), t);
  };

  const std::size_t l_end = spec.n_labeled;
  const std::size_t u_end = l_end + spec.n_unlabeled;
  const std::size_t t_end = u_end + spec.n_test;
  write_party(sa, raw.a, spec.numerical_a, spec.categorical_a, "a_labeled", 0, l_end, true);
  write_party(sa, raw.a, spec.numerical_a, spec.categorical_a, "a_unlabeled", l_end, u_end, false);
  write_party(sa, raw.a, spec.numerical_a, spec.categorical_a, "a_test", u_end, t_end, true);
  write_party(sb, raw.b, spec.numerical_b, spec.categorical_b, "b_labeled", 0, l_end, false);
  write_party(sb, raw.b, spec.numerical_b, spec.categorical_b, "b_unlabeled", l_end, u_end, false);
  write_party(sb, raw.b, spec.numerical_b, spec.categorical_b, "b_test", u_end, t_end, false);
}

}  // namespace vfedssd
