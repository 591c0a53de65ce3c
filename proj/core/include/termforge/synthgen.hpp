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
#include <optional>
#include <string>

#include "termforge/corpus.hpp"

namespace termforge {

/// Inclusive integer range.
struct IntRange {
  int min = 0;
  int max = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Synthetic corpus with planted repeated words. Features are drawn from the
/// true subwords; the transcription carries independent substitution noise.
struct SynthConfig {
  int vocabulary_size = 10;
  IntRange word_length_range{4, 6};
  int occurrences_per_word = 30;
  int alphabet_size = 55;
  int feature_dim = 40;
  IntRange frames_per_subword_range{1, 3};
  double symbol_substitution_rate = 0.0;
  double feature_noise_sigma = 0.0;
  double filler_rate = 0.0;
  std::uint64_t seed = 0;

  // Layout knobs.
  IntRange words_per_utterance_range{3, 6};
  IntRange filler_length_range{1, 2};
  // Vocabulary words are redrawn until every pair is at least this far
  // apart in normalized Levenshtein distance. 0 only demands distinct words.
  double min_word_distance = 0.0;

  // Insertion/deletion decoding errors; off by default so gold and
  // transcription spans stay aligned.
  bool insertions_deletions = false;
  double indel_rate = 0.0;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Throws Error on an invalid config.
void validate(const SynthConfig& config);

/// JSON text using SynthConfig field names; ranges are [min, max] arrays.
/// Missing fields keep their defaults.
SynthConfig parse_synth_config(const std::string& json_text);
std::string to_json(const SynthConfig& config);

/// Deterministic in config.seed. The returned corpus carries the gold
/// annotation (also available via corpus.gold()).
Corpus generate(const SynthConfig& config);

/// Gold word whose token overlaps the segment by at least half of the token
/// and half of the segment; nullopt if none (fillers never count).
std::optional<int> gold_segment_label(const GoldAnnotation& gold, const Segment& segment);

}  // namespace termforge
