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

#include "termforge/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "config_json.hpp"
#include "termforge/error.hpp"
#include "termforge/rng.hpp"

namespace termforge {

using nlohmann::json;
namespace fs = std::filesystem;

const char* mode_name(SystemMode mode) {
  switch (mode) {
    case SystemMode::kBaseline: return "baseline";
    case SystemMode::kSiamese: return "siamese";
    case SystemMode::kTriplet: return "triplet";
  }
  return "?";
}

SystemMode parse_mode(const std::string& name) {
  if (name == "baseline") return SystemMode::kBaseline;
  if (name == "siamese") return SystemMode::kSiamese;
  if (name == "triplet") return SystemMode::kTriplet;
  throw Error("unknown mode '" + name + "' (expected baseline, siamese or triplet)");
}

Extraction parse_extraction(const std::string& name) {
  if (name == "eom") return Extraction::kEom;
  if (name == "hybrid") return Extraction::kHybrid;
  throw Error("unknown extraction '" + name + "' (expected eom or hybrid)");
}

namespace {

const char* extraction_name(Extraction e) { return e == Extraction::kEom ? "eom" : "hybrid"; }
const char* loss_name(SystemMode m) { return m == SystemMode::kSiamese ? "siamese" : "triplet"; }

json align_json(const AlignScoring& a) {
  return {{"match_score", a.match_score},
          {"mismatch_penalty", a.mismatch_penalty},
          {"gap_penalty", a.gap_penalty},
          {"min_align_score", a.min_align_score},
          {"min_length", a.min_length}};
}

json discovery_json(const DiscoveryOptions& d) {
  return {{"max_pairs", d.max_pairs}, {"max_alignments_per_pair", d.max_alignments_per_pair}};
}

json leader_json(const LeaderParams& p) {
  return {{"radius", p.radius},
          {"separation", p.separation},
          {"min_length", p.min_length},
          {"ambiguous", p.ambiguous == AmbiguousPolicy::kNearest ? "nearest" : "drop"}};
}

json mining_json(const MiningConfig& m) {
  return {{"mu_s", m.thresholds.mu_s},       {"sigma_s", m.thresholds.sigma_s}, {"mu_d", m.thresholds.mu_d},
          {"sigma_d", m.thresholds.sigma_d}, {"include_self", m.include_self},  {"n_siamese", m.n_siamese},
          {"n_triplets", m.n_triplets}};
}

json network_json(const NetArch& a) {
  return {{"conv_channels", a.conv_channels}, {"conv_kernels", a.conv_kernels}, {"pool_width", a.pool_width},
          {"fc1_units", a.fc1_units},         {"fc2_units", a.fc2_units},       {"embedding_dim", a.embedding_dim}};
}

json train_json(const TrainConfig& t) {
  return {{"margin", t.margin},         {"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size}, {"max_epochs", t.max_epochs},
          {"max_frames", t.max_frames}, {"min_improvement", t.min_improvement}};
}

json hdbscan_json(const HdbscanParams& h) {
  return {{"min_cluster_size", h.min_cluster_size},
          {"min_samples", h.min_samples},
          {"cluster_selection_epsilon", h.cluster_selection_epsilon},
          {"allow_single_cluster", h.allow_single_cluster},
          {"max_points", h.max_points}};
}

json eval_json(const EvalOptions& e) {
  return {{"token_tolerance", e.token_tolerance}, {"boundary_tolerance", e.boundary_tolerance}};
}

// Fills in derived fields: sub-seeds, network input shape.
PipelineConfig resolved(PipelineConfig c) {
  c.synth.seed = derive_seed(c.seed, "synth");
  c.train.seed = derive_seed(c.seed, "train");
  c.network.input_frames = c.train.max_frames;
  c.network.feature_dim = c.synth.feature_dim;
  return c;
}

}  // namespace

bool is_pipeline_config(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    return j.is_object() && j.contains("synth");
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  PipelineConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw Error("config: top level must be an object");
    read_opt(j, "seed", c.seed);
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("extraction")) c.extraction = parse_extraction(j.at("extraction").get<std::string>());
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("synth")) c.synth = parse_synth_config(j.at("synth").dump());
    if (auto it = j.find("align"); it != j.end()) {
      read_opt(*it, "match_score", c.align.match_score);
      read_opt(*it, "mismatch_penalty", c.align.mismatch_penalty);
      read_opt(*it, "gap_penalty", c.align.gap_penalty);
      read_opt(*it, "min_align_score", c.align.min_align_score);
      read_opt(*it, "min_length", c.align.min_length);
    }
    if (auto it = j.find("discovery"); it != j.end()) {
      read_opt(*it, "max_pairs", c.discovery.max_pairs);
      read_opt(*it, "max_alignments_per_pair", c.discovery.max_alignments_per_pair);
    }
    if (auto it = j.find("leader"); it != j.end()) {
      read_opt(*it, "radius", c.leader.radius);
      read_opt(*it, "separation", c.leader.separation);
      read_opt(*it, "min_length", c.leader.min_length);
      if (it->contains("ambiguous")) {
        const auto p = it->at("ambiguous").get<std::string>();
        if (p == "nearest") {
          c.leader.ambiguous = AmbiguousPolicy::kNearest;
        } else if (p == "drop") {
          c.leader.ambiguous = AmbiguousPolicy::kDrop;
        } else {
          throw Error("config: leader.ambiguous must be nearest or drop");
        }
      }
    }
    if (auto it = j.find("mining"); it != j.end()) {
      read_opt(*it, "mu_s", c.mining.thresholds.mu_s);
      read_opt(*it, "sigma_s", c.mining.thresholds.sigma_s);
      read_opt(*it, "mu_d", c.mining.thresholds.mu_d);
      read_opt(*it, "sigma_d", c.mining.thresholds.sigma_d);
      read_opt(*it, "include_self", c.mining.include_self);
      read_opt(*it, "n_siamese", c.mining.n_siamese);
      read_opt(*it, "n_triplets", c.mining.n_triplets);
    }
    if (auto it = j.find("network"); it != j.end()) {
      read_opt(*it, "conv_channels", c.network.conv_channels);
      read_opt(*it, "conv_kernels", c.network.conv_kernels);
      read_opt(*it, "pool_width", c.network.pool_width);
      read_opt(*it, "fc1_units", c.network.fc1_units);
      read_opt(*it, "fc2_units", c.network.fc2_units);
      read_opt(*it, "embedding_dim", c.network.embedding_dim);
    }
    if (auto it = j.find("train"); it != j.end()) {
      read_opt(*it, "margin", c.train.margin);
      read_opt(*it, "learning_rate", c.train.learning_rate);
      read_opt(*it, "batch_size", c.train.batch_size);
      read_opt(*it, "max_epochs", c.train.max_epochs);
      read_opt(*it, "max_frames", c.train.max_frames);
      read_opt(*it, "min_improvement", c.train.min_improvement);
    }
    if (auto it = j.find("hdbscan"); it != j.end()) {
      read_opt(*it, "min_cluster_size", c.hdbscan.min_cluster_size);
      read_opt(*it, "min_samples", c.hdbscan.min_samples);
      read_opt(*it, "cluster_selection_epsilon", c.hdbscan.cluster_selection_epsilon);
      read_opt(*it, "allow_single_cluster", c.hdbscan.allow_single_cluster);
      read_opt(*it, "max_points", c.hdbscan.max_points);
    }
    if (auto it = j.find("eval"); it != j.end()) {
      read_opt(*it, "token_tolerance", c.eval.token_tolerance);
      read_opt(*it, "boundary_tolerance", c.eval.boundary_tolerance);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  const PipelineConfig r = resolved(c);
  validate(r.align);
  validate(r.leader);
  validate(r.mining.thresholds);
  r.network.validate();
  validate(r.train);
  validate(r.hdbscan);
  if (r.eval.token_tolerance < 0 || r.eval.boundary_tolerance < 0) throw Error("config: tolerances must be >= 0");
  return c;
}

std::string to_json(const PipelineConfig& c) {
  const json j = {{"seed", c.seed},
                  {"mode", mode_name(c.mode)},
                  {"extraction", extraction_name(c.extraction)},
                  {"out", c.out.string()},
                  {"synth", json::parse(to_json(c.synth))},
                  {"align", align_json(c.align)},
                  {"discovery", discovery_json(c.discovery)},
                  {"leader", leader_json(c.leader)},
                  {"mining", mining_json(c.mining)},
                  {"network", network_json(c.network)},
                  {"train", train_json(c.train)},
                  {"hdbscan", hdbscan_json(c.hdbscan)},
                  {"eval", eval_json(c.eval)}};
  return j.dump(2) + "\n";
}

std::string system_name(const PipelineConfig& c) {
  if (c.mode == SystemMode::kBaseline) return "baseline";
  return std::string(mode_name(c.mode)) + "-" + extraction_name(c.extraction);
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"synth", "discover", "baseline", "mine",
                                              "train", "embed",    "recluster", "evaluate"};
  return names;
}

ArtifactPaths artifact_paths(const PipelineConfig& c) {
  ArtifactPaths p;
  p.corpus = c.out / "corpus";
  p.segments = c.out / "segments.jsonl";
  p.baseline_clusters = c.out / "clusters_baseline.json";
  p.manifest = c.out / "pairs.json";
  const fs::path model = c.out / (std::string("model-") + loss_name(c.mode));
  p.params = model / "params.bin";
  p.loss_curve = model / "loss_curve.csv";
  p.embeddings = model / "embeddings.bin";
  const fs::path sys = c.out / system_name(c);
  p.final_clusters = sys / "clusters_final.json";
  p.report_json = sys / "report.json";
  p.report_txt = sys / "report.txt";
  p.stamps = c.out / ".stamps";
  return p;
}

namespace {

std::string read_text(const fs::path& path) { return io::read_file(path); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_file(path, text);
}

void require(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw Error(std::string("missing ") + what + ": " + path.string());
}

std::uint64_t hash_path(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a("dir");
    for (const auto& f : files) {
      h = fnv1a(f.filename().string(), h);
      h = fnv1a(read_text(f), h);
    }
    return h;
  }
  return fnv1a(read_text(path));
}

struct StagePlan {
  std::string stamp_name;
  json settings;
  std::vector<std::pair<fs::path, const char*>> inputs;
  std::vector<fs::path> outputs;
};

StagePlan plan_for(const std::string& stage, const PipelineConfig& c, const ArtifactPaths& p) {
  StagePlan plan;
  plan.stamp_name = stage;
  const std::string loss = loss_name(c.mode);
  if (stage == "synth") {
    plan.settings = json::parse(to_json(c.synth));
    plan.outputs = {p.corpus};
  } else if (stage == "discover") {
    plan.settings = {{"align", align_json(c.align)}, {"discovery", discovery_json(c.discovery)}};
    plan.inputs = {{p.corpus, "corpus"}};
    plan.outputs = {p.segments};
  } else if (stage == "baseline") {
    plan.settings = leader_json(c.leader);
    plan.inputs = {{p.segments, "segments"}};
    plan.outputs = {p.baseline_clusters};
  } else if (stage == "mine") {
    plan.settings = {{"mining", mining_json(c.mining)}, {"seed", derive_seed(c.seed, "mine")}};
    plan.inputs = {{p.segments, "segments"}, {p.baseline_clusters, "baseline clusters"}};
    plan.outputs = {p.manifest};
  } else if (stage == "train") {
    plan.stamp_name = "train-" + loss;
    plan.settings = {{"network", network_json(c.network)},
                     {"train", train_json(c.train)},
                     {"loss", loss},
                     {"init_seed", derive_seed(c.seed, "init")},
                     {"train_seed", c.train.seed}};
    plan.inputs = {{p.manifest, "pair manifest"}, {p.segments, "segments"}, {p.corpus, "corpus"}};
    plan.outputs = {p.params, p.loss_curve};
  } else if (stage == "embed") {
    plan.stamp_name = "embed-" + loss;
    plan.inputs = {{p.params, "params"}, {p.segments, "segments"}, {p.corpus, "corpus"}};
    plan.outputs = {p.embeddings};
  } else if (stage == "recluster") {
    plan.stamp_name = "recluster-" + system_name(c);
    plan.settings = {{"hdbscan", hdbscan_json(c.hdbscan)}, {"extraction", extraction_name(c.extraction)}};
    plan.inputs = {{p.embeddings, "embeddings"}, {p.segments, "segments"}};
    plan.outputs = {p.final_clusters};
  } else if (stage == "evaluate") {
    plan.stamp_name = "evaluate-" + system_name(c);
    plan.settings = {{"eval", eval_json(c.eval)}, {"system", system_name(c)}};
    const bool base = c.mode == SystemMode::kBaseline;
    plan.inputs = {{base ? p.baseline_clusters : p.final_clusters, base ? "baseline clusters" : "final clusters"},
                   {p.segments, "segments"},
                   {p.corpus, "corpus"}};
    plan.outputs = {p.report_json, p.report_txt};
  } else {
    throw Error("unknown stage '" + stage + "'");
  }
  return plan;
}

std::string stage_hash(const std::string& stage, const StagePlan& plan) {
  std::uint64_t h = fnv1a(stage);
  h = fnv1a(plan.settings.dump(), h);
  for (const auto& [path, what] : plan.inputs) {
    const std::uint64_t ih = hash_path(path);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&ih), sizeof ih), h);
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void execute(const std::string& stage, const PipelineConfig& c, const ArtifactPaths& p) {
  if (stage == "synth") {
    write_corpus(generate(c.synth), p.corpus);
  } else if (stage == "discover") {
    const Corpus corpus = load_corpus(p.corpus);
    const SegmentSet segs = discover_segments(corpus, c.align, c.discovery);
    spdlog::info("discover: {} segments from {} utterances", segs.size(), corpus.utterances().size());
    write_segments(segs, p.segments);
  } else if (stage == "baseline") {
    const ClusterSet cs = leader_cluster(read_segments(p.segments), c.leader);
    spdlog::info("baseline: {} clusters, {} noise", cs.clusters.size(), cs.noise.size());
    write_text(p.baseline_clusters, clusters_to_json(cs, false));
  } else if (stage == "mine") {
    const SegmentSet segs = read_segments(p.segments);
    const ClusterSet cs = clusters_from_json(read_text(p.baseline_clusters));
    const auto retained = select_pure_clusters(cs, segs, c.mining.thresholds, c.mining.include_self);
    const auto contrasting = select_contrasting_pairs(retained, segs, c.mining.thresholds);
    spdlog::info("mine: {} of {} clusters retained, {} contrasting pairs", retained.size(), cs.clusters.size(),
                 contrasting.size());
    const PairManifest m = sample_manifest(retained, contrasting, c.mining.n_siamese, c.mining.n_triplets,
                                           derive_seed(c.seed, "mine"));
    write_text(p.manifest, manifest_to_json(m));
  } else if (stage == "train") {
    const Corpus corpus = load_corpus(p.corpus);
    const SegmentSet segs = read_segments(p.segments);
    const PairManifest m = manifest_from_json(read_text(p.manifest));
    const LossKind kind = c.mode == SystemMode::kSiamese ? LossKind::kContrastive : LossKind::kTriplet;
    TrainResult r = train(init_params(c.network, derive_seed(c.seed, "init")), m, segs, corpus, c.train, kind);
    spdlog::info("train: {} epochs, final loss {:.6g}", r.loss_curve.size(),
                 r.loss_curve.empty() ? 0.0 : r.loss_curve.back());
    fs::create_directories(p.params.parent_path());
    save_params(r.params, p.params);
    write_text(p.loss_curve, loss_curve_csv(r.loss_curve));
  } else if (stage == "embed") {
    const Corpus corpus = load_corpus(p.corpus);
    save_embeddings(embed_all(load_params(p.params), read_segments(p.segments), corpus), p.embeddings);
  } else if (stage == "recluster") {
    const SegmentSet segs = read_segments(p.segments);
    const EmbeddingTable table = load_embeddings(p.embeddings);
    if (table.rows != segs.size()) throw Error("recluster: embedding rows do not match segment count");
    ClusterSet cs = to_cluster_set(hdbscan(table, c.hdbscan, c.extraction));
    for (auto& cl : cs.clusters) cl.mean_len = mean_symbol_length(segs, cl.members);
    spdlog::info("recluster: {} clusters, {} noise", cs.clusters.size(), cs.noise.size());
    write_text(p.final_clusters, clusters_to_json(cs, true));
  } else if (stage == "evaluate") {
    const bool base = c.mode == SystemMode::kBaseline;
    const ClusterSet cs = clusters_from_json(read_text(base ? p.baseline_clusters : p.final_clusters));
    const EvalReport r = evaluate(cs, read_segments(p.segments), load_corpus(p.corpus), c.eval, system_name(c));
    write_text(p.report_json, report_to_json(r));
    write_text(p.report_txt, report_table({r}));
  }
}

}  // namespace

StageOutcome run_stage(const std::string& stage, const PipelineConfig& config, bool force) {
  const PipelineConfig c = resolved(config);
  const ArtifactPaths p = artifact_paths(c);
  const StagePlan plan = plan_for(stage, c, p);
  for (const auto& [path, what] : plan.inputs) require(path, what);

  const std::string hash = stage_hash(stage, plan);
  const fs::path stamp = p.stamps / (plan.stamp_name + ".hash");
  const bool outputs_present =
      std::all_of(plan.outputs.begin(), plan.outputs.end(), [](const fs::path& o) { return fs::exists(o); });
  if (!force && outputs_present && fs::exists(stamp) && read_text(stamp) == hash) {
    spdlog::info("{}: up to date", stage);
    return StageOutcome::kSkipped;
  }
  fs::create_directories(c.out);
  const auto t0 = std::chrono::steady_clock::now();
  spdlog::info("{}: running", stage);
  execute(stage, c, p);
  write_text(stamp, hash);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  spdlog::info("{}: done in {:.2f}s", stage, secs);
  return StageOutcome::kRan;
}

EvalReport run_all(const PipelineConfig& config, bool force) {
  for (const auto& stage : stage_names()) {
    const bool learned = stage == "mine" || stage == "train" || stage == "embed" || stage == "recluster";
    if (config.mode == SystemMode::kBaseline && learned) continue;
    run_stage(stage, config, force);
  }
  return report_from_json(read_text(artifact_paths(config).report_json));
}

}  // namespace termforge
