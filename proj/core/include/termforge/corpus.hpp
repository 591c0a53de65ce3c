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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace termforge {

/// Subword unit index in [0, alphabet_size).
using Symbol = std::int32_t;
using SymbolSeq = std::vector<Symbol>;

/// Half-open frame interval [start, end).
struct FrameSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;

  [[nodiscard]] std::int64_t length() const { return end - start; }
  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
  friend auto operator<=>(const FrameSpan&, const FrameSpan&) = default;
};

/// Overlap length of two spans, 0 when disjoint.
std::int64_t overlap(const FrameSpan& a, const FrameSpan& b);

/// Row-major frames x dim matrix of 32-bit features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t frames, std::size_t dim);
  FeatureMatrix(std::size_t frames, std::size_t dim, std::vector<float> values);

  [[nodiscard]] std::size_t frames() const { return frames_; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] bool empty() const { return frames_ == 0; }

  [[nodiscard]] std::span<const float> row(std::size_t r) const {
    return {values_.data() + r * dim_, dim_};
  }
  std::span<float> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }

  [[nodiscard]] float at(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }
  [[nodiscard]] const std::vector<float>& values() const { return values_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// One utterance: features plus its pseudo-transcription. spans[i] is the
/// frame interval decoded as symbols[i].
struct Utterance {
  std::string id;
  FeatureMatrix features;
  SymbolSeq symbols;
  std::vector<FrameSpan> spans;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// A gold word or filler token. word == kFiller marks non-vocabulary material.
struct GoldToken {
  static constexpr int kFiller = -1;

  int word = kFiller;
  FrameSpan span;
  SymbolSeq subwords;

  [[nodiscard]] bool is_word() const { return word != kFiller; }
  friend bool operator==(const GoldToken&, const GoldToken&) = default;
};

/// Ground truth for one utterance. Tokens tile [0, frames); units carry the
/// true subword string with its own frame alignment.
struct GoldUtterance {
  std::string utterance_id;
  SymbolSeq unit_symbols;
  std::vector<FrameSpan> unit_spans;
  std::vector<GoldToken> tokens;

  /// Sorted token edges, first 0 and last the utterance length.
  [[nodiscard]] std::vector<std::int64_t> boundaries() const;

  /// True subwords whose unit lies at least half inside `span`.
  [[nodiscard]] SymbolSeq subwords_in(const FrameSpan& span) const;

  friend bool operator==(const GoldUtterance&, const GoldUtterance&) = default;
};

struct GoldAnnotation {
  std::vector<GoldUtterance> utterances;
  std::vector<SymbolSeq> vocabulary;

  [[nodiscard]] const GoldUtterance* find(const std::string& utterance_id) const;
  friend bool operator==(const GoldAnnotation&, const GoldAnnotation&) = default;
};

/// Validated, immutable collection of utterances sharing one feature
/// dimension and alphabet.
class Corpus {
 public:
  Corpus() = default;
  /// Validates every utterance invariant; throws Error naming the utterance.
  Corpus(int feature_dim, int alphabet_size, std::vector<Utterance> utterances,
         std::optional<GoldAnnotation> gold = std::nullopt);

  [[nodiscard]] int feature_dim() const { return feature_dim_; }
  [[nodiscard]] int alphabet_size() const { return alphabet_size_; }
  [[nodiscard]] const std::vector<Utterance>& utterances() const { return utterances_; }
  [[nodiscard]] const std::optional<GoldAnnotation>& gold() const { return gold_; }

  [[nodiscard]] std::size_t index_of(const std::string& id) const;
  [[nodiscard]] const Utterance& utterance(const std::string& id) const {
    return utterances_[index_of(id)];
  }
  [[nodiscard]] std::int64_t total_frames() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.feature_dim_ == b.feature_dim_ && a.alphabet_size_ == b.alphabet_size_ &&
           a.utterances_ == b.utterances_ && a.gold_ == b.gold_;
  }

 private:
  int feature_dim_ = 0;
  int alphabet_size_ = 0;
  std::vector<Utterance> utterances_;
  std::optional<GoldAnnotation> gold_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Hypothesized term occurrence. Ids are dense and assigned in discovery order.
struct Segment {
  std::int64_t id = 0;
  std::string utterance_id;
  FrameSpan span;
  SymbolSeq symbols;
  std::optional<std::vector<double>> embedding;

  friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentSet = std::vector<Segment>;

/// Reads manifest.json, <id>.feat, <id>.sym and the optional gold.json.
Corpus load_corpus(const std::filesystem::path& dir);

/// Inverse of load_corpus; creates `dir` if needed. Throws IoError.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Rows [start, end) of the segment's utterance.
FeatureMatrix slice_features(const Corpus& corpus, const Segment& segment);
FeatureMatrix slice_features(const Utterance& utterance, const FrameSpan& span);

/// Feature file codec: u64 frames, u64 dim, little-endian f32 row-major.
void write_feature_file(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_file(const std::filesystem::path& path);

/// segments.jsonl: one {"id","utterance","span":[s,e],"symbols"} per line.
void write_segments(const SegmentSet& segments, const std::filesystem::path& path);
SegmentSet read_segments(const std::filesystem::path& path);

}  // namespace termforge
