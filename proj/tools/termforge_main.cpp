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

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "termforge/error.hpp"
#include "termforge/pipeline.hpp"
#include "termforge/synthgen.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw termforge::IoError("cannot read config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("termforge"));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  CLI::App app{"termforge: spoken-term discovery pipeline"};
  std::string stage;
  std::string config_path;
  std::string out;
  std::string mode;
  std::string extraction;
  bool force = false;
  bool quiet = false;

  std::vector<std::string> choices = termforge::stage_names();
  choices.push_back("all");
  app.add_option("stage", stage, "Stage to run, or 'all'")->required()->check(CLI::IsMember(choices));
  app.add_option("-c,--config", config_path, "Pipeline config JSON (or a synth config for 'synth')")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-o,--out", out, "Artifact directory (overrides the config)");
  app.add_option("--mode", mode, "Override mode")->check(CLI::IsMember({"baseline", "siamese", "triplet"}));
  app.add_option("--extraction", extraction, "Override extraction")->check(CLI::IsMember({"eom", "hybrid"}));
  app.add_flag("-f,--force", force, "Recompute even when the stage is up to date");
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");
  CLI11_PARSE(app, argc, argv);

  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    const std::string text = slurp(config_path);
    if (!termforge::is_pipeline_config(text)) {
      if (stage != "synth") {
        spdlog::error("{} is a synth config; only the 'synth' stage accepts it", config_path);
        return 2;
      }
      if (out.empty()) {
        spdlog::error("--out is required with a synth config");
        return 2;
      }
      termforge::write_corpus(termforge::generate(termforge::parse_synth_config(text)), out);
      spdlog::info("synth: corpus written to {}", out);
      return 0;
    }

    termforge::PipelineConfig config = termforge::parse_pipeline_config(text);
    if (!out.empty()) config.out = out;
    if (!mode.empty()) config.mode = termforge::parse_mode(mode);
    if (!extraction.empty()) config.extraction = termforge::parse_extraction(extraction);

    if (stage == "all") {
      const auto report = termforge::run_all(config, force);
      std::cout << termforge::report_table({report});
    } else {
      termforge::run_stage(stage, config, force);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
