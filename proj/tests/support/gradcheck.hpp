// Copyright 2026 The termforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "termforge/embednet.hpp"

namespace gradcheck {

// Gradient-check architecture: small enough for finite differences, wide
// enough that embeddings of distinct words are well separated.
inline termforge::NetArch check_arch() {
  termforge::NetArch a;
  a.input_frames = 32;
  a.feature_dim = 8;
  a.conv_channels = {8, 16, 16};
  a.conv_kernels = {5, 5, 3};
  a.fc1_units = 32;
  a.fc2_units = 32;
  a.embedding_dim = 16;
  return a;
}

// Smallest useful architecture, for training and shape tests.
inline termforge::NetArch tiny_arch() {
  termforge::NetArch a;
  a.input_frames = 16;
  a.feature_dim = 3;
  a.conv_channels = {4, 5, 6};
  a.conv_kernels = {3, 3, 2};
  a.fc1_units = 8;
  a.fc2_units = 6;
  a.embedding_dim = 4;
  return a;
}

// Batch whose examples look like word tokens: each input is a per-word
// prototype plus small noise. Matched pairs share a prototype; mismatched
// pairs and negatives use different ones.
struct BatchData {
  std::vector<std::vector<double>> rows;
  termforge::Batch batch;
};

inline BatchData make_batch(const termforge::NetArch& a, termforge::LossKind kind, std::size_t examples,
                            double margin, std::mt19937_64& g) {
  const auto len = static_cast<std::size_t>(a.input_frames * a.feature_dim);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto prototype = [&] {
    std::vector<double> x(len);
    for (auto& v : x) v = nd(g);
    return x;
  };
  auto token = [&](const std::vector<double>& proto) {
    std::vector<double> x = proto;
    for (auto& v : x) v += 0.1 * nd(g);
    return x;
  };
  BatchData d;
  const std::size_t per = kind == termforge::LossKind::kContrastive ? 2 : 3;
  d.rows.reserve(examples * per);
  for (std::size_t k = 0; k < examples; ++k) {
    const auto p = prototype();
    d.rows.push_back(token(p));
    if (kind == termforge::LossKind::kContrastive) {
      d.rows.push_back(k % 2 == 0 ? token(p) : token(prototype()));
    } else {
      d.rows.push_back(token(p));
      d.rows.push_back(token(prototype()));
    }
  }
  d.batch.kind = kind;
  d.batch.margin = margin;
  for (std::size_t k = 0; k < examples; ++k) {
    const auto* r = &d.rows[k * per];
    if (kind == termforge::LossKind::kContrastive) {
      d.batch.pairs.push_back({r[0], r[1], k % 2 == 0 ? 1 : 0});
    } else {
      d.batch.triplets.push_back({r[0], r[1], r[2]});
    }
  }
  return d;
}

// Activation pattern of the whole batch under `params`: every ReLU sign and
// pool argmax from the oracle forward pass, plus each loss hinge state.
inline std::vector<int> pattern(const termforge::NetworkParams& params, const termforge::Batch& batch) {
  std::vector<int> pat;
  auto emb = [&](std::span<const double> x) {
    return oracle::forward(params, std::vector<double>(x.begin(), x.end()), &pat);
  };
  auto sq = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  for (const auto& ex : batch.pairs) {
    const auto e0 = emb(ex.x0), e1 = emb(ex.x1);
    pat.push_back(ex.label == 0 && batch.margin - std::sqrt(sq(e0, e1)) > 0.0);
  }
  for (const auto& ex : batch.triplets) {
    const auto ea = emb(ex.anchor), ep = emb(ex.positive), en = emb(ex.negative);
    pat.push_back(batch.margin + sq(ea, ep) - sq(ea, en) > 0.0);
  }
  return pat;
}

struct Result {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a kink
  double worst = 0.0;
};

// Central differences with step h on `count` randomly chosen parameters.
// A draw whose +-h perturbation changes the activation pattern straddles a
// kink, where the difference quotient is no gradient estimate; it is
// skipped and another parameter drawn. Relative error is
// |a - n| / max(|a|, |n|); entries where both are below `floor` count as
// exact.
inline Result check(const termforge::NetworkParams& params, const termforge::Batch& batch, std::size_t count,
                    std::uint64_t seed, double h = 1e-3, double floor = 1e-10) {
  termforge::Gradient grad;
  termforge::backward(params, batch, grad);
  const std::vector<int> base = pattern(params, batch);
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<std::size_t> pick(0, params.values.size() - 1);
  termforge::NetworkParams p = params;
  Result r;
  while (r.checked < count && r.skipped < 50 * count) {
    const std::size_t i = pick(g);
    const double saved = p.values[i];
    p.values[i] = saved + h;
    const double up = termforge::batch_loss(p, batch);
    const bool smooth_up = pattern(p, batch) == base;
    p.values[i] = saved - h;
    const double down = termforge::batch_loss(p, batch);
    const bool smooth_down = pattern(p, batch) == base;
    p.values[i] = saved;
    if (!smooth_up || !smooth_down) {
      ++r.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad.values[i];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    const double err = scale < floor ? 0.0 : std::abs(numeric - analytic) / scale;
    r.worst = std::max(r.worst, err);
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck
