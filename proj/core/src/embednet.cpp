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

#include "termforge/embednet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "termforge/error.hpp"
#include "termforge/parallel.hpp"
#include "termforge/rng.hpp"

namespace termforge {

// ---------------------------------------------------------------------------
// Architecture and parameter layout

std::array<int, 5> NetArch::frame_counts() const {
  const int c1 = input_frames - conv_kernels[0] + 1;
  const int p1 = c1 / pool_width;
  const int c2 = p1 - conv_kernels[1] + 1;
  const int p2 = c2 / pool_width;
  const int c3 = p2 - conv_kernels[2] + 1;
  return {c1, p1, c2, p2, c3};
}

int NetArch::flat_dim() const { return frame_counts()[4] * conv_channels[2]; }

void NetArch::validate() const {
  if (feature_dim < 1 || fc1_units < 1 || fc2_units < 1 || embedding_dim < 1 || pool_width < 1) {
    throw Error("network architecture: layer sizes must be positive");
  }
  for (int i = 0; i < 3; ++i) {
    if (conv_channels[i] < 1 || conv_kernels[i] < 1) {
      throw Error("network architecture: conv channels and kernels must be positive");
    }
  }
  for (int f : frame_counts()) {
    if (f < 1) {
      throw Error("network architecture: input of " + std::to_string(input_frames) +
                  " frames is too short for the convolution stack");
    }
  }
}

const char* tensor_name(Tensor t) {
  static constexpr const char* kNames[kTensorCount] = {
      "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "conv3.weight", "conv3.bias",
      "fc1.weight",   "fc1.bias",   "fc2.weight",   "fc2.bias",   "out.weight",   "out.bias"};
  return kNames[static_cast<int>(t)];
}

ParamLayout::ParamLayout(const NetArch& a) {
  a.validate();
  const auto sz = [](int v) { return static_cast<std::size_t>(v); };
  const std::size_t flat = sz(a.flat_dim());
  shapes_ = {
      std::vector<std::size_t>{sz(a.conv_channels[0]), sz(a.conv_kernels[0]), sz(a.feature_dim)},
      {sz(a.conv_channels[0])},
      {sz(a.conv_channels[1]), sz(a.conv_kernels[1]), sz(a.conv_channels[0])},
      {sz(a.conv_channels[1])},
      {sz(a.conv_channels[2]), sz(a.conv_kernels[2]), sz(a.conv_channels[1])},
      {sz(a.conv_channels[2])},
      {sz(a.fc1_units), flat},
      {sz(a.fc1_units)},
      {sz(a.fc2_units), sz(a.fc1_units)},
      {sz(a.fc2_units)},
      {sz(a.embedding_dim), sz(a.fc2_units)},
      {sz(a.embedding_dim)},
  };
  for (int t = 0; t < kTensorCount; ++t) {
    sizes_[t] = std::accumulate(shapes_[t].begin(), shapes_[t].end(), std::size_t{1}, std::multiplies<>());
    offsets_[t] = total_;
    total_ += sizes_[t];
  }
}

std::span<const double> NetworkParams::tensor(Tensor t) const {
  const ParamLayout layout(arch);
  return std::span<const double>(values).subspan(layout.offset(t), layout.size(t));
}

std::span<double> NetworkParams::tensor(Tensor t) {
  const ParamLayout layout(arch);
  return std::span<double>(values).subspan(layout.offset(t), layout.size(t));
}

NetworkParams init_params(const NetArch& arch, std::uint64_t seed) {
  const ParamLayout layout(arch);
  NetworkParams p;
  p.arch = arch;
  p.init_seed = seed;
  p.values.assign(layout.total(), 0.0);
  const Rng root(seed);
  constexpr Tensor kWeights[] = {Tensor::kConv1W, Tensor::kConv2W, Tensor::kConv3W,
                                 Tensor::kFc1W,   Tensor::kFc2W,   Tensor::kOutW};
  for (Tensor t : kWeights) {
    const auto& shape = layout.shape(t);
    const std::size_t fan_in = layout.size(t) / shape[0];
    const double gain = t == Tensor::kOutW ? 3.0 : 6.0;
    const double bound = std::sqrt(gain / static_cast<double>(fan_in));
    Rng rng = root.split(tensor_name(t));
    for (double& v : p.tensor(t)) v = rng.uniform(-bound, bound);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Layer kernels. Activations are row-major [frame][channel].

namespace {

struct Views {
  explicit Views(const NetworkParams& p) : layout(p.arch) {
    for (int t = 0; t < kTensorCount; ++t) ptr[t] = p.values.data() + layout.offset(static_cast<Tensor>(t));
  }
  const double* operator[](Tensor t) const { return ptr[static_cast<int>(t)]; }
  ParamLayout layout;
  std::array<const double*, kTensorCount> ptr{};
};

struct GradViews {
  GradViews(std::vector<double>& g, const ParamLayout& layout) {
    for (int t = 0; t < kTensorCount; ++t) ptr[t] = g.data() + layout.offset(static_cast<Tensor>(t));
  }
  double* operator[](Tensor t) const { return ptr[static_cast<int>(t)]; }
  std::array<double*, kTensorCount> ptr{};
};

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// out[t][o] = relu(b[o] + sum_{k,c} w[o][k][c] * in[t+k][c])
void conv_relu(const double* in, int frames_in, int c_in, const double* w, const double* b, int kernel,
               int c_out, std::vector<double>& out) {
  const int frames_out = frames_in - kernel + 1;
  const std::size_t window = static_cast<std::size_t>(kernel * c_in);
  out.assign(static_cast<std::size_t>(frames_out * c_out), 0.0);
  for (int t = 0; t < frames_out; ++t) {
    const double* x = in + static_cast<std::size_t>(t * c_in);
    for (int o = 0; o < c_out; ++o) {
      const double s = b[o] + dot(w + static_cast<std::size_t>(o) * window, x, window);
      out[static_cast<std::size_t>(t * c_out + o)] = s > 0.0 ? s : 0.0;
    }
  }
}

void conv_backward(const double* in, int frames_in, int c_in, const double* w, int kernel, int c_out,
                   const std::vector<double>& d_out, double* dw, double* db, double* d_in) {
  const int frames_out = frames_in - kernel + 1;
  const std::size_t window = static_cast<std::size_t>(kernel * c_in);
  for (int t = 0; t < frames_out; ++t) {
    const double* x = in + static_cast<std::size_t>(t * c_in);
    double* dx = d_in ? d_in + static_cast<std::size_t>(t * c_in) : nullptr;
    for (int o = 0; o < c_out; ++o) {
      const double g = d_out[static_cast<std::size_t>(t * c_out + o)];
      if (g == 0.0) continue;
      db[o] += g;
      double* dwo = dw + static_cast<std::size_t>(o) * window;
      const double* wo = w + static_cast<std::size_t>(o) * window;
      for (std::size_t i = 0; i < window; ++i) dwo[i] += g * x[i];
      if (dx) {
        for (std::size_t i = 0; i < window; ++i) dx[i] += g * wo[i];
      }
    }
  }
}

// Max over non-overlapping windows; ties go to the earliest frame.
void max_pool(const std::vector<double>& in, int frames_in, int channels, int width, std::vector<double>& out,
              std::vector<int>& argmax) {
  const int frames_out = frames_in / width;
  out.assign(static_cast<std::size_t>(frames_out * channels), 0.0);
  argmax.assign(out.size(), 0);
  for (int t = 0; t < frames_out; ++t) {
    for (int c = 0; c < channels; ++c) {
      int best = t * width;
      for (int k = 1; k < width; ++k) {
        const int f = t * width + k;
        if (in[static_cast<std::size_t>(f * channels + c)] > in[static_cast<std::size_t>(best * channels + c)]) best = f;
      }
      const auto i = static_cast<std::size_t>(t * channels + c);
      out[i] = in[static_cast<std::size_t>(best * channels + c)];
      argmax[i] = best;
    }
  }
}

void fc(const double* in, int n_in, const double* w, const double* b, int n_out, bool relu,
        std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(n_out), 0.0);
  for (int o = 0; o < n_out; ++o) {
    const double s = b[o] + dot(w + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in), in,
                                static_cast<std::size_t>(n_in));
    out[static_cast<std::size_t>(o)] = relu && s < 0.0 ? 0.0 : s;
  }
}

void fc_backward(const double* in, int n_in, const double* w, int n_out, const std::vector<double>& d_out,
                 double* dw, double* db, std::vector<double>& d_in) {
  d_in.assign(static_cast<std::size_t>(n_in), 0.0);
  for (int o = 0; o < n_out; ++o) {
    const double g = d_out[static_cast<std::size_t>(o)];
    if (g == 0.0) continue;
    db[o] += g;
    double* dwo = dw + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
    const double* wo = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
    for (int i = 0; i < n_in; ++i) {
      dwo[i] += g * in[i];
      d_in[static_cast<std::size_t>(i)] += g * wo[i];
    }
  }
}

// d *= 1[activation > 0]; the ReLU kink takes the zero subgradient.
void relu_mask(std::vector<double>& d, const std::vector<double>& activation) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (activation[i] <= 0.0) d[i] = 0.0;
  }
}

struct Trace {
  std::span<const double> input;
  std::vector<double> a1, p1, a2, p2, a3, h1, h2, out;
  std::vector<int> idx1, idx2;
};

void run_forward(const Views& v, const NetArch& a, std::span<const double> input, Trace& tr) {
  const std::size_t expected = static_cast<std::size_t>(a.input_frames) * static_cast<std::size_t>(a.feature_dim);
  if (input.size() != expected) {
    throw Error("forward: input has " + std::to_string(input.size()) + " values, expected " +
                std::to_string(expected));
  }
  const auto f = a.frame_counts();
  const auto& ch = a.conv_channels;
  const auto& k = a.conv_kernels;
  tr.input = input;
  conv_relu(input.data(), a.input_frames, a.feature_dim, v[Tensor::kConv1W], v[Tensor::kConv1B], k[0], ch[0], tr.a1);
  max_pool(tr.a1, f[0], ch[0], a.pool_width, tr.p1, tr.idx1);
  conv_relu(tr.p1.data(), f[1], ch[0], v[Tensor::kConv2W], v[Tensor::kConv2B], k[1], ch[1], tr.a2);
  max_pool(tr.a2, f[2], ch[1], a.pool_width, tr.p2, tr.idx2);
  conv_relu(tr.p2.data(), f[3], ch[1], v[Tensor::kConv3W], v[Tensor::kConv3B], k[2], ch[2], tr.a3);
  fc(tr.a3.data(), a.flat_dim(), v[Tensor::kFc1W], v[Tensor::kFc1B], a.fc1_units, true, tr.h1);
  fc(tr.h1.data(), a.fc1_units, v[Tensor::kFc2W], v[Tensor::kFc2B], a.fc2_units, true, tr.h2);
  fc(tr.h2.data(), a.fc2_units, v[Tensor::kOutW], v[Tensor::kOutB], a.embedding_dim, false, tr.out);
}

void unpool(const std::vector<double>& d_pooled, const std::vector<int>& argmax, int channels, std::size_t frames_in,
            std::vector<double>& d_in) {
  d_in.assign(frames_in * static_cast<std::size_t>(channels), 0.0);
  for (std::size_t i = 0; i < d_pooled.size(); ++i) {
    const auto c = static_cast<int>(i % static_cast<std::size_t>(channels));
    d_in[static_cast<std::size_t>(argmax[i] * channels + c)] += d_pooled[i];
  }
}

// Accumulates d(loss)/d(params) given d(loss)/d(embedding).
void run_backward(const Views& v, const NetArch& a, const Trace& tr, const std::vector<double>& d_embed,
                  const GradViews& g) {
  const auto f = a.frame_counts();
  const auto& ch = a.conv_channels;
  const auto& k = a.conv_kernels;
  std::vector<double> d_h2, d_h1, d_a3, d_p2, d_a2, d_p1, d_a1;
  fc_backward(tr.h2.data(), a.fc2_units, v[Tensor::kOutW], a.embedding_dim, d_embed, g[Tensor::kOutW],
              g[Tensor::kOutB], d_h2);
  relu_mask(d_h2, tr.h2);
  fc_backward(tr.h1.data(), a.fc1_units, v[Tensor::kFc2W], a.fc2_units, d_h2, g[Tensor::kFc2W], g[Tensor::kFc2B],
              d_h1);
  relu_mask(d_h1, tr.h1);
  fc_backward(tr.a3.data(), a.flat_dim(), v[Tensor::kFc1W], a.fc1_units, d_h1, g[Tensor::kFc1W], g[Tensor::kFc1B],
              d_a3);
  relu_mask(d_a3, tr.a3);
  d_p2.assign(tr.p2.size(), 0.0);
  conv_backward(tr.p2.data(), f[3], ch[1], v[Tensor::kConv3W], k[2], ch[2], d_a3, g[Tensor::kConv3W],
                g[Tensor::kConv3B], d_p2.data());
  unpool(d_p2, tr.idx2, ch[1], static_cast<std::size_t>(f[2]), d_a2);
  relu_mask(d_a2, tr.a2);
  d_p1.assign(tr.p1.size(), 0.0);
  conv_backward(tr.p1.data(), f[1], ch[0], v[Tensor::kConv2W], k[1], ch[1], d_a2, g[Tensor::kConv2W],
                g[Tensor::kConv2B], d_p1.data());
  unpool(d_p1, tr.idx1, ch[0], static_cast<std::size_t>(f[0]), d_a1);
  relu_mask(d_a1, tr.a1);
  conv_backward(tr.input.data(), a.input_frames, a.feature_dim, v[Tensor::kConv1W], k[0], ch[0], d_a1,
                g[Tensor::kConv1W], g[Tensor::kConv1B], nullptr);
}

}  // namespace

std::vector<double> pad_or_truncate(const FeatureMatrix& features, int frames) {
  if (features.empty()) throw Error("pad_or_truncate: empty feature matrix");
  if (frames < 1) throw Error("pad_or_truncate: frame count must be positive");
  const std::size_t dim = features.dim();
  std::vector<double> out(static_cast<std::size_t>(frames) * dim, 0.0);
  const std::size_t keep = std::min(features.frames(), static_cast<std::size_t>(frames));
  for (std::size_t i = 0; i < keep * dim; ++i) out[i] = features.values()[i];
  return out;
}

std::vector<double> forward(const NetworkParams& params, std::span<const double> padded) {
  const Views v(params);
  Trace tr;
  run_forward(v, params.arch, padded, tr);
  return tr.out;
}

// ---------------------------------------------------------------------------
// Losses

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("embedding size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double contrastive_loss(std::span<const double> e0, std::span<const double> e1, int y, double margin) {
  const double d2 = squared_distance(e0, e1);
  if (y == 1) return 0.5 * d2;
  const double hinge = std::max(0.0, margin - std::sqrt(d2));
  return 0.5 * hinge * hinge;
}

double triplet_loss(std::span<const double> ea, std::span<const double> ep, std::span<const double> en,
                    double margin) {
  return std::max(0.0, margin + squared_distance(ea, ep) - squared_distance(ea, en));
}

double contrastive_loss_grad(std::span<const double> e0, std::span<const double> e1, int y, double margin,
                             std::span<double> g0, std::span<double> g1) {
  const double d2 = squared_distance(e0, e1);
  const std::size_t n = e0.size();
  if (y == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      g0[i] = e0[i] - e1[i];
      g1[i] = -g0[i];
    }
    return 0.5 * d2;
  }
  const double d = std::sqrt(d2);
  const double hinge = margin - d;
  if (hinge <= 0.0 || d == 0.0) {
    std::fill(g0.begin(), g0.end(), 0.0);
    std::fill(g1.begin(), g1.end(), 0.0);
    return hinge > 0.0 ? 0.5 * hinge * hinge : 0.0;
  }
  const double scale = -hinge / d;
  for (std::size_t i = 0; i < n; ++i) {
    g0[i] = scale * (e0[i] - e1[i]);
    g1[i] = -g0[i];
  }
  return 0.5 * hinge * hinge;
}

double triplet_loss_grad(std::span<const double> ea, std::span<const double> ep, std::span<const double> en,
                         double margin, std::span<double> ga, std::span<double> gp, std::span<double> gn) {
  const double value = margin + squared_distance(ea, ep) - squared_distance(ea, en);
  if (value <= 0.0) {
    std::fill(ga.begin(), ga.end(), 0.0);
    std::fill(gp.begin(), gp.end(), 0.0);
    std::fill(gn.begin(), gn.end(), 0.0);
    return 0.0;
  }
  for (std::size_t i = 0; i < ea.size(); ++i) {
    ga[i] = 2.0 * (en[i] - ep[i]);
    gp[i] = -2.0 * (ea[i] - ep[i]);
    gn[i] = 2.0 * (ea[i] - en[i]);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Batches

namespace {

constexpr std::size_t kReductionBlock = 8;

double example_loss(const Views& v, const NetArch& a, const Batch& batch, std::size_t i, Trace* traces,
                    std::vector<double>* d_embed) {
  const auto emb = static_cast<std::size_t>(a.embedding_dim);
  if (batch.kind == LossKind::kContrastive) {
    const auto& ex = batch.pairs[i];
    run_forward(v, a, ex.x0, traces[0]);
    run_forward(v, a, ex.x1, traces[1]);
    if (!d_embed) return contrastive_loss(traces[0].out, traces[1].out, ex.label, batch.margin);
    d_embed[0].assign(emb, 0.0);
    d_embed[1].assign(emb, 0.0);
    return contrastive_loss_grad(traces[0].out, traces[1].out, ex.label, batch.margin, d_embed[0], d_embed[1]);
  }
  const auto& ex = batch.triplets[i];
  run_forward(v, a, ex.anchor, traces[0]);
  run_forward(v, a, ex.positive, traces[1]);
  run_forward(v, a, ex.negative, traces[2]);
  if (!d_embed) return triplet_loss(traces[0].out, traces[1].out, traces[2].out, batch.margin);
  for (int b = 0; b < 3; ++b) d_embed[b].assign(emb, 0.0);
  return triplet_loss_grad(traces[0].out, traces[1].out, traces[2].out, batch.margin, d_embed[0], d_embed[1],
                           d_embed[2]);
}

}  // namespace

double batch_loss(const NetworkParams& params, const Batch& batch) {
  const std::size_t n = batch.size();
  if (n == 0) return 0.0;
  const Views v(params);
  std::vector<double> losses(n);
  parallel_for(n, [&](std::size_t i) {
    Trace traces[3];
    losses[i] = example_loss(v, params.arch, batch, i, traces, nullptr);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(n);
}

double backward(const NetworkParams& params, const Batch& batch, Gradient& grad) {
  const Views v(params);
  const std::size_t total = v.layout.total();
  grad.values.assign(total, 0.0);
  const std::size_t n = batch.size();
  if (n == 0) return 0.0;
  const int branches = batch.kind == LossKind::kContrastive ? 2 : 3;
  const double scale = 1.0 / static_cast<double>(n);
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<std::vector<double>> block_grads(blocks);
  std::vector<double> losses(n);

  parallel_for(blocks, [&](std::size_t blk) {
    auto& g = block_grads[blk];
    g.assign(total, 0.0);
    const GradViews gv(g, v.layout);
    Trace traces[3];
    std::vector<double> d_embed[3];
    const std::size_t end = std::min(n, (blk + 1) * kReductionBlock);
    for (std::size_t i = blk * kReductionBlock; i < end; ++i) {
      losses[i] = example_loss(v, params.arch, batch, i, traces, d_embed);
      for (int b = 0; b < branches; ++b) {
        bool any = false;
        for (double& d : d_embed[b]) {
          d *= scale;
          any = any || d != 0.0;
        }
        if (any) run_backward(v, params.arch, traces[b], d_embed[b], gv);
      }
    }
  });

  for (const auto& g : block_grads) {
    for (std::size_t i = 0; i < total; ++i) grad.values[i] += g[i];
  }
  double loss = 0.0;
  for (double l : losses) loss += l;
  return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Training

void validate(const TrainConfig& c) {
  if (!(c.margin > 0.0)) throw Error("train config: margin must be > 0");
  if (!(c.learning_rate >= 0.0)) throw Error("train config: learning_rate must be >= 0");
  if (c.batch_size < 1) throw Error("train config: batch_size must be >= 1");
  if (c.max_epochs < 1 || c.max_epochs > 20) throw Error("train config: max_epochs must be in [1, 20]");
  if (c.max_frames < 1) throw Error("train config: L_max must be >= 1");
}

TrainResult train(NetworkParams params, const PairManifest& manifest, const SegmentSet& segments,
                  const Corpus& corpus, const TrainConfig& config, LossKind mode) {
  validate(config);
  if (params.arch.input_frames != config.max_frames) {
    throw Error("train: network input length differs from the configured L_max");
  }
  const std::size_t n = mode == LossKind::kContrastive ? manifest.siamese_pairs.size() : manifest.triplets.size();
  if (n == 0) throw Error("train: manifest has no examples for the selected mode");

  std::vector<std::vector<double>> inputs(segments.size());
  auto need = [&](std::int64_t id) {
    if (id < 0 || static_cast<std::size_t>(id) >= segments.size()) {
      throw Error("train: manifest references unknown segment " + std::to_string(id));
    }
    auto& slot = inputs[static_cast<std::size_t>(id)];
    if (slot.empty()) slot = pad_or_truncate(slice_features(corpus, segments[static_cast<std::size_t>(id)]), config.max_frames);
    return std::span<const double>(slot);
  };
  if (mode == LossKind::kContrastive) {
    for (const auto& p : manifest.siamese_pairs) {
      need(p.a);
      need(p.b);
    }
  } else {
    for (const auto& t : manifest.triplets) {
      need(t.anchor);
      need(t.positive);
      need(t.negative);
    }
  }

  TrainResult result;
  const Rng shuffle_root(config.seed);
  std::vector<std::size_t> order(n);
  Gradient grad;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      Batch batch;
      batch.kind = mode;
      batch.margin = config.margin;
      for (std::size_t k = start; k < end; ++k) {
        if (mode == LossKind::kContrastive) {
          const auto& p = manifest.siamese_pairs[order[k]];
          batch.pairs.push_back({need(p.a), need(p.b), p.label});
        } else {
          const auto& t = manifest.triplets[order[k]];
          batch.triplets.push_back({need(t.anchor), need(t.positive), need(t.negative)});
        }
      }
      const double loss = backward(params, batch, grad);
      epoch_total += loss * static_cast<double>(end - start);
      if (config.learning_rate != 0.0) {
        for (std::size_t i = 0; i < params.values.size(); ++i) params.values[i] -= config.learning_rate * grad.values[i];
      }
    }
    const double epoch_loss = epoch_total / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error("train: epoch " + std::to_string(epoch + 1) + " mean loss is not finite (diverged)");
    }
    result.loss_curve.push_back(epoch_loss);
    if (result.loss_curve.size() >= 2) {
      const double prev = result.loss_curve[result.loss_curve.size() - 2];
      if (prev - epoch_loss < config.min_improvement) break;
    }
  }
  result.params = std::move(params);
  return result;
}

EmbeddingTable embed_all(const NetworkParams& params, const SegmentSet& segments, const Corpus& corpus) {
  EmbeddingTable table(segments.size(), static_cast<std::size_t>(params.arch.embedding_dim));
  const Views v(params);
  parallel_for(segments.size(), [&](std::size_t i) {
    const auto input = pad_or_truncate(slice_features(corpus, segments[i]), params.arch.input_frames);
    Trace tr;
    run_forward(v, params.arch, input, tr);
    std::copy(tr.out.begin(), tr.out.end(), table.values.begin() + static_cast<std::ptrdiff_t>(i * table.cols));
  });
  return table;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {
constexpr std::uint32_t kParamsVersion = 1;
}

void save_params(const NetworkParams& p, const std::filesystem::path& path) {
  const ParamLayout layout(p.arch);
  if (p.values.size() != layout.total()) throw Error("save_params: value count does not match architecture");
  std::string out = "TFNP";
  io::put_le<std::uint32_t>(out, kParamsVersion);
  const auto& a = p.arch;
  for (int v : {a.input_frames, a.feature_dim, a.conv_channels[0], a.conv_channels[1], a.conv_channels[2],
                a.conv_kernels[0], a.conv_kernels[1], a.conv_kernels[2], a.pool_width, a.fc1_units, a.fc2_units,
                a.embedding_dim}) {
    io::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(v));
  }
  io::put_le<std::uint64_t>(out, p.init_seed);
  io::put_le<std::uint64_t>(out, kTensorCount);
  for (int t = 0; t < kTensorCount; ++t) {
    const auto& shape = layout.shape(static_cast<Tensor>(t));
    io::put_le<std::uint64_t>(out, shape.size());
    for (auto d : shape) io::put_le<std::uint64_t>(out, d);
  }
  io::put_le<std::uint64_t>(out, p.values.size());
  for (double v : p.values) io::put_le<double>(out, v);
  io::write_file(path, out);
}

NetworkParams load_params(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  io::Reader r(bytes, path.string());
  if (r.get_bytes(4) != "TFNP") throw Error(path.string() + ": not a parameter checkpoint");
  if (const auto version = r.get<std::uint32_t>(); version != kParamsVersion) {
    throw Error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  NetworkParams p;
  auto& a = p.arch;
  for (int* field : {&a.input_frames, &a.feature_dim, &a.conv_channels[0], &a.conv_channels[1], &a.conv_channels[2],
                     &a.conv_kernels[0], &a.conv_kernels[1], &a.conv_kernels[2], &a.pool_width, &a.fc1_units,
                     &a.fc2_units, &a.embedding_dim}) {
    *field = static_cast<int>(r.get<std::uint64_t>());
  }
  p.init_seed = r.get<std::uint64_t>();
  const ParamLayout layout(a);
  if (r.get<std::uint64_t>() != kTensorCount) throw Error(path.string() + ": unexpected tensor count");
  for (int t = 0; t < kTensorCount; ++t) {
    std::vector<std::size_t> shape(r.get<std::uint64_t>());
    for (auto& d : shape) d = r.get<std::uint64_t>();
    if (shape != layout.shape(static_cast<Tensor>(t))) {
      throw Error(path.string() + ": shape of " + tensor_name(static_cast<Tensor>(t)) + " disagrees with architecture");
    }
  }
  const auto count = r.get<std::uint64_t>();
  if (count != layout.total() || r.remaining() != count * sizeof(double)) {
    throw Error(path.string() + ": payload size disagrees with architecture");
  }
  p.values.resize(count);
  for (auto& v : p.values) v = r.get<double>();
  return p;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::string out = "TFEM";
  io::put_le<std::uint64_t>(out, table.rows);
  io::put_le<std::uint64_t>(out, table.cols);
  for (double v : table.values) io::put_le<double>(out, v);
  io::write_file(path, out);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  io::Reader r(bytes, path.string());
  if (r.get_bytes(4) != "TFEM") throw Error(path.string() + ": not an embedding table");
  EmbeddingTable t;
  t.rows = r.get<std::uint64_t>();
  t.cols = r.get<std::uint64_t>();
  if (t.cols != 0 && r.remaining() / sizeof(double) / t.cols < t.rows) throw Error(path.string() + ": truncated file");
  if (r.remaining() != t.rows * t.cols * sizeof(double)) throw Error(path.string() + ": payload size mismatch");
  t.values.resize(t.rows * t.cols);
  for (auto& v : t.values) v = r.get<double>();
  return t;
}

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, curve[i]);
    out += buf;
  }
  return out;
}

}  // namespace termforge
