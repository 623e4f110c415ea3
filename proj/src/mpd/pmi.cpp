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

#include "vfedssd/mpd/pmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vfedssd/common/error.hpp"
#include "vfedssd/common/rng.hpp"
#include "vfedssd/eval/metrics.hpp"

namespace vfedssd {

PmiProbeSpec PmiProbeSpec::independent(std::size_t values_a, std::size_t values_b) {
  PmiProbeSpec s;
  s.values_a = values_a;
  s.values_b = values_b;
  s.weights.resize(values_a * values_b);
  for (std::size_t a = 0; a < values_a; ++a) {
    for (std::size_t b = 0; b < values_b; ++b) s.weights[a * values_b + b] = static_cast<double>((a + 1) * (b + 1));
  }
  return s;
}

PmiProbeSpec PmiProbeSpec::coupled(std::size_t v, double beta) {
  PmiProbeSpec s;
  s.values_a = v;
  s.values_b = v;
  s.weights.resize(v * v);
  for (std::size_t a = 0; a < v; ++a) {
    for (std::size_t b = 0; b < v; ++b) {
      const double angle = 2.0 * std::numbers::pi * (static_cast<double>(a) - static_cast<double>(b)) / static_cast<double>(v);
      s.weights[a * v + b] = static_cast<double>(1 + a % 3) * std::exp(beta * std::cos(angle));
    }
  }
  return s;
}

double PmiProbeData::pmi(std::size_t a, std::size_t b) const {
  double n = 0.0;
  for (std::size_t c : counts_a) n += static_cast<double>(c);
  const double joint = static_cast<double>(joint_counts[a * spec.values_b + b]);
  return std::log(joint * n / (static_cast<double>(counts_a[a]) * static_cast<double>(counts_b[b])));
}

PmiProbeData make_pmi_probe(const PmiProbeSpec& spec, std::uint64_t seed) {
  if (spec.values_a < 2 || spec.values_b < 2) throw ValidationError("probe variables need at least 2 values");
  if (spec.weights.size() != spec.values_a * spec.values_b) throw ValidationError("probe weights have the wrong size");
  std::vector<double> cumulative(spec.weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    if (!(spec.weights[i] >= 0.0)) throw ValidationError("probe weights must be non-negative");
    total += spec.weights[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw ValidationError("probe weights sum to zero");

  PmiProbeData d;
  d.spec = spec;
  d.joint_counts.assign(spec.weights.size(), 0);
  d.counts_a.assign(spec.values_a, 0);
  d.counts_b.assign(spec.values_b, 0);
  d.dataset.schema_a.party = Party::A;
  d.dataset.schema_a.fields = {FieldSpec::categorical("probe_a", spec.values_a, spec.embed_dim)};
  d.dataset.schema_b.party = Party::B;
  d.dataset.schema_b.fields = {FieldSpec::categorical("probe_b", spec.values_b, spec.embed_dim)};
  d.dataset.labeled = {Matrix(0, 1), Matrix(0, 1), {}};
  d.dataset.test = {Matrix(0, 1), Matrix(0, 1), {}};
  Matrix xa(spec.rows, 1);
  Matrix xb(spec.rows, 1);
  Rng rng(seed);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double u = rng.uniform() * total;
    std::size_t cell = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    if (cell >= cumulative.size()) cell = cumulative.size() - 1;
    const std::size_t a = cell / spec.values_b;
    const std::size_t b = cell % spec.values_b;
    xa(r, 0) = static_cast<float>(a);
    xb(r, 0) = static_cast<float>(b);
    ++d.joint_counts[cell];
    ++d.counts_a[a];
    ++d.counts_b[b];
  }
  d.dataset.unlabeled = {std::move(xa), std::move(xb)};
  d.dataset.validate();
  return d;
}

PmiReport pmi_probe(BottomModel<float>& f_a, BottomModel<float>& f_b, TopModel<float>& g, const PmiProbeData& data,
                    std::size_t k, std::size_t min_count) {
  if (k == 0) throw ValidationError("k must be at least 1");
  const std::size_t va = data.spec.values_a;
  const std::size_t vb = data.spec.values_b;
  Matrix xa(va, 1);
  Matrix xb(vb, 1);
  for (std::size_t a = 0; a < va; ++a) xa(a, 0) = static_cast<float>(a);
  for (std::size_t b = 0; b < vb; ++b) xb(b, 0) = static_cast<float>(b);
  const Matrix ha = f_a.forward(xa);
  const Matrix hb = f_b.forward(xb);
  Matrix pairs(va * vb, ha.cols() + hb.cols());
  for (std::size_t a = 0; a < va; ++a) {
    for (std::size_t b = 0; b < vb; ++b) {
      auto row = pairs.row(a * vb + b);
      std::copy_n(ha.row(a).data(), ha.cols(), row.data());
      std::copy_n(hb.row(b).data(), hb.cols(), row.data() + ha.cols());
    }
  }
  const Matrix logits = g.forward(pairs);

  PmiReport report;
  report.log_k = std::log(static_cast<double>(k));
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t a = 0; a < va; ++a) {
    for (std::size_t b = 0; b < vb; ++b) {
      const std::size_t c = data.joint_counts[a * vb + b];
      if (c < min_count) {
        ++report.excluded;
        continue;
      }
      PmiPair p{a, b, c, data.pmi(a, b), static_cast<double>(logits(a * vb + b, 0))};
      report.pairs.push_back(p);
      x.push_back(p.logit);
      y.push_back(p.pmi - report.log_k);
    }
  }
  if (report.pairs.empty()) throw MetricUndefinedError("no probe pair reaches the count threshold");
  double dev = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dev += std::abs(x[i] - y[i]);
    sum += x[i];
  }
  report.mean_abs_deviation = dev / static_cast<double>(x.size());
  report.mean_logit = sum / static_cast<double>(x.size());
  try {
    report.pearson = pearson(x, y);
  } catch (const MetricUndefinedError&) {
    report.pearson = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace vfedssd
