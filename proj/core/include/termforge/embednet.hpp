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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "termforge/corpus.hpp"
#include "termforge/dense.hpp"
#include "termforge/mining.hpp"

namespace termforge {

/// Convolutional segment encoder. Convolutions run over time with the
/// feature dimension as input channels:
///   conv(k0, c0)-ReLU-maxpool(2) -> conv(k1, c1)-ReLU-maxpool(2)
///   -> conv(k2, c2)-ReLU -> flatten -> fc1-ReLU -> fc2-ReLU -> linear.
struct NetArch {
  int input_frames = 100;  // L_max
  int feature_dim = 40;
  std::array<int, 3> conv_channels{32, 64, 64};
  std::array<int, 3> conv_kernels{5, 5, 3};
  int pool_width = 2;
  int fc1_units = 256;
  int fc2_units = 128;
  int embedding_dim = 40;

  /// Output frame counts after conv1, pool1, conv2, pool2, conv3.
  [[nodiscard]] std::array<int, 5> frame_counts() const;
  [[nodiscard]] int flat_dim() const;
  /// Throws Error if some layer would produce no frames.
  void validate() const;

  friend bool operator==(const NetArch&, const NetArch&) = default;
};

enum class Tensor : int {
  kConv1W, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B,
  kFc1W, kFc1B, kFc2W, kFc2B, kOutW, kOutB,
};
inline constexpr int kTensorCount = 12;

const char* tensor_name(Tensor t);

/// Offsets and shapes of every learnable tensor inside one flat buffer.
/// Conv weights are [out][kernel][in]; fc weights are [out][in].
class ParamLayout {
 public:
  explicit ParamLayout(const NetArch& arch);

  [[nodiscard]] std::size_t offset(Tensor t) const { return offsets_[static_cast<int>(t)]; }
  [[nodiscard]] std::size_t size(Tensor t) const { return sizes_[static_cast<int>(t)]; }
  [[nodiscard]] const std::vector<std::size_t>& shape(Tensor t) const { return shapes_[static_cast<int>(t)]; }
  [[nodiscard]] std::size_t total() const { return total_; }

 private:
  std::array<std::size_t, kTensorCount> offsets_{};
  std::array<std::size_t, kTensorCount> sizes_{};
  std::array<std::vector<std::size_t>, kTensorCount> shapes_;
  std::size_t total_ = 0;
};

/// The single parameter set shared by every branch of the Siamese and
/// Triplet networks.
struct NetworkParams {
  NetArch arch;
  std::uint64_t init_seed = 0;
  std::vector<double> values;

  [[nodiscard]] std::span<const double> tensor(Tensor t) const;
  std::span<double> tensor(Tensor t);

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Fan-in scaled uniform weights (He bound for ReLU layers), zero biases.
NetworkParams init_params(const NetArch& arch, std::uint64_t seed);

/// Gradient buffer congruent with NetworkParams::values.
struct Gradient {
  std::vector<double> values;
};

/// Right-pads with zero frames or truncates the tail; row-major L x dim.
std::vector<double> pad_or_truncate(const FeatureMatrix& features, int frames);

std::vector<double> forward(const NetworkParams& params, std::span<const double> padded);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// y/2 * d^2 + (1-y)/2 * max(0, m - d)^2 with d = ||e0 - e1||.
double contrastive_loss(std::span<const double> e0, std::span<const double> e1, int y, double margin);

/// max(0, m + ||ea - ep||^2 - ||ea - en||^2).
double triplet_loss(std::span<const double> ea, std::span<const double> ep, std::span<const double> en,
                    double margin);

/// Loss plus its gradient w.r.t. each embedding (written to g*). At the
/// hinge boundary and at d = 0 for mismatched pairs the zero subgradient is
/// used.
double contrastive_loss_grad(std::span<const double> e0, std::span<const double> e1, int y, double margin,
                             std::span<double> g0, std::span<double> g1);
double triplet_loss_grad(std::span<const double> ea, std::span<const double> ep, std::span<const double> en,
                         double margin, std::span<double> ga, std::span<double> gp, std::span<double> gn);

enum class LossKind { kContrastive, kTriplet };

struct PairExample {
  std::span<const double> x0;
  std::span<const double> x1;
  int label = 0;
};

struct TripletExample {
  std::span<const double> anchor;
  std::span<const double> positive;
  std::span<const double> negative;
};

struct Batch {
  LossKind kind = LossKind::kContrastive;
  double margin = 1.0;
  std::vector<PairExample> pairs;
  std::vector<TripletExample> triplets;

  [[nodiscard]] std::size_t size() const { return kind == LossKind::kContrastive ? pairs.size() : triplets.size(); }
};

/// Mean loss over the batch, forward only.
double batch_loss(const NetworkParams& params, const Batch& batch);

/// Mean loss over the batch; `grad` receives its analytic gradient. Examples
/// are reduced in fixed blocks, so the result does not depend on the number
/// of worker threads.
double backward(const NetworkParams& params, const Batch& batch, Gradient& grad);

struct TrainConfig {
  double margin = 1.0;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int max_epochs = 20;
  std::uint64_t seed = 0;
  int max_frames = 100;  // L_max
  double min_improvement = 1e-4;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& config);

struct TrainResult {
  NetworkParams params;
  std::vector<double> loss_curve;  // epoch-mean loss
};

/// Mini-batch gradient descent on the manifest's Siamese pairs (contrastive)
/// or triplets. Stops after max_epochs or once an epoch improves the mean
/// loss by less than min_improvement. Throws Error on a non-finite epoch loss.
TrainResult train(NetworkParams params, const PairManifest& manifest, const SegmentSet& segments,
                  const Corpus& corpus, const TrainConfig& config, LossKind mode);

/// |segments| x embedding_dim table, row i for segments[i].
using EmbeddingTable = DenseMatrix;

EmbeddingTable embed_all(const NetworkParams& params, const SegmentSet& segments, const Corpus& corpus);

/// Checkpoint: "TFNP" magic, u32 version, architecture and seed as u64s,
/// per-tensor shape header, then little-endian f64 values.
void save_params(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_params(const std::filesystem::path& path);

/// "TFEM" magic, u64 rows, u64 dim, little-endian f64 row-major.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// "epoch,mean_loss" CSV, epochs counted from 1.
std::string loss_curve_csv(const std::vector<double>& curve);

}  // namespace termforge
