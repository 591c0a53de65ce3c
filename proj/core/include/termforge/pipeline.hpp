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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "termforge/baseline.hpp"
#include "termforge/embednet.hpp"
#include "termforge/eval.hpp"
#include "termforge/mining.hpp"
#include "termforge/recluster.hpp"
#include "termforge/seqmatch.hpp"
#include "termforge/synthgen.hpp"

namespace termforge {

enum class SystemMode { kBaseline, kSiamese, kTriplet };

struct MiningConfig {
  MiningThresholds thresholds;
  bool include_self = true;
  std::size_t n_siamese = 10000;
  std::size_t n_triplets = 10000;

  friend bool operator==(const MiningConfig&, const MiningConfig&) = default;
};

/// Everything one pipeline run needs. Sub-seeds for synthesis, sampling,
/// initialization and training are derived from `seed`; synth.seed is
/// overwritten.
struct PipelineConfig {
  std::uint64_t seed = 0;
  SystemMode mode = SystemMode::kTriplet;
  Extraction extraction = Extraction::kHybrid;
  std::filesystem::path out = "termforge-out";
  SynthConfig synth;
  AlignScoring align;
  DiscoveryOptions discovery;
  LeaderParams leader;
  MiningConfig mining;
  NetArch network;  // input_frames and feature_dim follow train/synth
  TrainConfig train;
  HdbscanParams hdbscan;
  EvalOptions eval;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Parses a pipeline config. Missing keys keep their defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text);
std::string to_json(const PipelineConfig& config);

/// True when the JSON object looks like a pipeline config (has "synth").
bool is_pipeline_config(const std::string& json_text);

/// "baseline", "siamese-eom", "siamese-hybrid", "triplet-eom", "triplet-hybrid".
std::string system_name(const PipelineConfig& config);
const char* mode_name(SystemMode mode);
SystemMode parse_mode(const std::string& name);
Extraction parse_extraction(const std::string& name);

const std::vector<std::string>& stage_names();

/// Artifact locations under config.out.
struct ArtifactPaths {
  std::filesystem::path corpus;
  std::filesystem::path segments;
  std::filesystem::path baseline_clusters;
  std::filesystem::path manifest;
  std::filesystem::path params;
  std::filesystem::path loss_curve;
  std::filesystem::path embeddings;
  std::filesystem::path final_clusters;
  std::filesystem::path report_json;
  std::filesystem::path report_txt;
  std::filesystem::path stamps;
};

ArtifactPaths artifact_paths(const PipelineConfig& config);

enum class StageOutcome { kRan, kSkipped };

/// Runs one stage. Skips when its stamp matches the hash of its inputs and
/// settings, unless `force`. Throws Error("missing <artifact>: <path>") when
/// an upstream artifact is absent.
StageOutcome run_stage(const std::string& stage, const PipelineConfig& config, bool force = false);

/// Stages in order for the configured mode (baseline skips
/// mine/train/embed/recluster). Returns the final report.
EvalReport run_all(const PipelineConfig& config, bool force = false);

}  // namespace termforge
