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

#include "termforge/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "config_json.hpp"
#include "termforge/error.hpp"
#include "termforge/rng.hpp"
#include "termforge/seqmatch.hpp"

namespace termforge {

using nlohmann::json;

namespace {

void check_range(const IntRange& r, int lowest, const char* name) {
  if (r.min < lowest || r.max < r.min) {
    throw Error(std::string("synth config: ") + name + " must satisfy " + std::to_string(lowest) +
                " <= min <= max");
  }
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(std::string("synth config: ") + name + " must lie in [0, 1]");
}

// Number of distinct words the config admits, saturating at `cap`.
double word_capacity(const SynthConfig& c) {
  double total = 0.0;
  for (int len = c.word_length_range.min; len <= c.word_length_range.max; ++len) {
    total += std::pow(static_cast<double>(c.alphabet_size), len);
  }
  return total;
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.vocabulary_size < 1) throw Error("synth config: vocabulary_size must be >= 1");
  if (c.occurrences_per_word < 1) throw Error("synth config: occurrences_per_word must be >= 1");
  if (c.alphabet_size < 2) throw Error("synth config: alphabet_size must be >= 2");
  if (c.feature_dim < 1) throw Error("synth config: feature_dim must be >= 1");
  check_range(c.word_length_range, 1, "word_length_range");
  check_range(c.frames_per_subword_range, 1, "frames_per_subword_range");
  check_range(c.words_per_utterance_range, 1, "words_per_utterance_range");
  check_range(c.filler_length_range, 1, "filler_length_range");
  check_probability(c.symbol_substitution_rate, "symbol_substitution_rate");
  check_probability(c.filler_rate, "filler_rate");
  check_probability(c.indel_rate, "indel_rate");
  check_probability(c.min_word_distance, "min_word_distance");
  if (!(c.feature_noise_sigma >= 0.0) || !std::isfinite(c.feature_noise_sigma)) {
    throw Error("synth config: feature_noise_sigma must be non-negative");
  }
}

SynthConfig parse_synth_config(const std::string& json_text) {
  SynthConfig c;
  try {
    const json j = json::parse(json_text);
    read_opt(j, "vocabulary_size", c.vocabulary_size);
    read_opt(j, "word_length_range", c.word_length_range);
    read_opt(j, "occurrences_per_word", c.occurrences_per_word);
    read_opt(j, "alphabet_size", c.alphabet_size);
    read_opt(j, "feature_dim", c.feature_dim);
    read_opt(j, "frames_per_subword_range", c.frames_per_subword_range);
    read_opt(j, "symbol_substitution_rate", c.symbol_substitution_rate);
    read_opt(j, "feature_noise_sigma", c.feature_noise_sigma);
    read_opt(j, "filler_rate", c.filler_rate);
    read_opt(j, "seed", c.seed);
    read_opt(j, "words_per_utterance_range", c.words_per_utterance_range);
    read_opt(j, "filler_length_range", c.filler_length_range);
    read_opt(j, "insertions_deletions", c.insertions_deletions);
    read_opt(j, "indel_rate", c.indel_rate);
    read_opt(j, "min_word_distance", c.min_word_distance);
  } catch (const json::exception& e) {
    throw Error(std::string("synth config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string to_json(const SynthConfig& c) {
  const json j = {{"vocabulary_size", c.vocabulary_size},
                  {"word_length_range", c.word_length_range},
                  {"occurrences_per_word", c.occurrences_per_word},
                  {"alphabet_size", c.alphabet_size},
                  {"feature_dim", c.feature_dim},
                  {"frames_per_subword_range", c.frames_per_subword_range},
                  {"symbol_substitution_rate", c.symbol_substitution_rate},
                  {"feature_noise_sigma", c.feature_noise_sigma},
                  {"filler_rate", c.filler_rate},
                  {"seed", c.seed},
                  {"words_per_utterance_range", c.words_per_utterance_range},
                  {"filler_length_range", c.filler_length_range},
                  {"insertions_deletions", c.insertions_deletions},
                  {"indel_rate", c.indel_rate},
                  {"min_word_distance", c.min_word_distance}};
  return j.dump();
}

namespace {

struct Unit {
  Symbol symbol;
  FrameSpan span;
};

std::vector<SymbolSeq> draw_vocabulary(const SynthConfig& c, Rng rng) {
  if (word_capacity(c) < c.vocabulary_size) {
    throw Error("synth config: vocabulary_size words not constructible without duplicates");
  }
  std::vector<SymbolSeq> vocab;
  std::set<SymbolSeq> seen;
  const long max_attempts = 1000L * c.vocabulary_size + 1000;
  long attempts = 0;
  while (static_cast<int>(vocab.size()) < c.vocabulary_size) {
    if (++attempts > max_attempts) {
      throw Error(
          "synth config: vocabulary_size words not constructible without duplicates at the requested "
          "min_word_distance");
    }
    SymbolSeq w(static_cast<std::size_t>(rng.range(c.word_length_range.min, c.word_length_range.max)));
    for (auto& s : w) s = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(c.alphabet_size)));
    const bool far = std::all_of(vocab.begin(), vocab.end(), [&](const SymbolSeq& v) {
      return normalized_levenshtein(v, w) >= c.min_word_distance;
    });
    if (far && seen.insert(w).second) vocab.push_back(std::move(w));
  }
  return vocab;
}

// Decoding errors applied to the true unit sequence.
std::vector<Unit> decode(const std::vector<Unit>& truth, const SynthConfig& c, Rng& rng) {
  const auto alphabet = static_cast<std::uint64_t>(c.alphabet_size);
  std::vector<Unit> out;
  out.reserve(truth.size());
  for (const auto& u : truth) {
    Unit d = u;
    if (rng.bernoulli(c.symbol_substitution_rate)) {
      d.symbol = static_cast<Symbol>((static_cast<std::uint64_t>(u.symbol) + 1 + rng.below(alphabet - 1)) % alphabet);
    }
    out.push_back(d);
  }
  if (!c.insertions_deletions || c.indel_rate <= 0.0) return out;

  std::vector<Unit> edited;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = rng.uniform();
    if (r < c.indel_rate / 2 && out.size() > 1) {
      // Deletion: the frames are absorbed by the neighbouring decoded unit.
      if (!edited.empty()) {
        edited.back().span.end = out[i].span.end;
      } else if (i + 1 < out.size()) {
        out[i + 1].span.start = out[i].span.start;
      } else {
        edited.push_back(out[i]);
      }
    } else if (r < c.indel_rate && out[i].span.length() >= 2) {
      // Insertion: the unit's tail is decoded as an extra random symbol.
      const std::int64_t mid = out[i].span.start + out[i].span.length() / 2;
      edited.push_back({out[i].symbol, {out[i].span.start, mid}});
      edited.push_back({static_cast<Symbol>(rng.below(alphabet)), {mid, out[i].span.end}});
    } else {
      edited.push_back(out[i]);
    }
  }
  return edited;
}

}  // namespace

Corpus generate(const SynthConfig& c) {
  validate(c);
  const Rng root(c.seed);

  std::vector<std::vector<double>> prototypes(static_cast<std::size_t>(c.alphabet_size));
  {
    Rng rng = root.split("prototypes");
    for (auto& p : prototypes) {
      p.resize(static_cast<std::size_t>(c.feature_dim));
      for (auto& v : p) v = rng.normal();
    }
  }

  GoldAnnotation gold;
  gold.vocabulary = draw_vocabulary(c, root.split("vocabulary"));

  std::vector<int> tokens;
  for (int w = 0; w < c.vocabulary_size; ++w) {
    for (int k = 0; k < c.occurrences_per_word; ++k) tokens.push_back(w);
  }
  std::vector<std::vector<int>> layout;
  {
    Rng rng = root.split("layout");
    rng.shuffle(tokens);
    std::size_t pos = 0;
    while (pos < tokens.size()) {
      const auto n = static_cast<std::size_t>(
          rng.range(c.words_per_utterance_range.min, c.words_per_utterance_range.max));
      const std::size_t end = std::min(tokens.size(), pos + n);
      layout.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                          tokens.begin() + static_cast<std::ptrdiff_t>(end));
      pos = end;
    }
  }

  const auto dim = static_cast<std::size_t>(c.feature_dim);
  const auto alphabet = static_cast<std::uint64_t>(c.alphabet_size);
  const Rng utt_root = root.split("utterance");
  std::vector<Utterance> utterances;
  utterances.reserve(layout.size());

  for (std::size_t ui = 0; ui < layout.size(); ++ui) {
    Rng rng = utt_root.split(ui);
    char id[32];
    std::snprintf(id, sizeof id, "utt%05zu", ui);

    GoldUtterance g;
    g.utterance_id = id;
    std::vector<Unit> truth;
    std::int64_t frame = 0;
    auto emit = [&](Symbol s) {
      const auto len = rng.range(c.frames_per_subword_range.min, c.frames_per_subword_range.max);
      truth.push_back({s, {frame, frame + len}});
      frame += len;
    };
    for (std::size_t k = 0; k < layout[ui].size(); ++k) {
      if (k > 0 && rng.bernoulli(c.filler_rate)) {
        GoldToken filler;
        filler.span.start = frame;
        const auto len = rng.range(c.filler_length_range.min, c.filler_length_range.max);
        for (std::int64_t f = 0; f < len; ++f) {
          const auto s = static_cast<Symbol>(rng.below(alphabet));
          filler.subwords.push_back(s);
          emit(s);
        }
        filler.span.end = frame;
        g.tokens.push_back(std::move(filler));
      }
      GoldToken token;
      token.word = layout[ui][k];
      token.subwords = gold.vocabulary[static_cast<std::size_t>(token.word)];
      token.span.start = frame;
      for (Symbol s : token.subwords) emit(s);
      token.span.end = frame;
      g.tokens.push_back(std::move(token));
    }

    std::vector<float> values;
    values.reserve(static_cast<std::size_t>(frame) * dim);
    for (const auto& u : truth) {
      const auto& proto = prototypes[static_cast<std::size_t>(u.symbol)];
      for (std::int64_t f = u.span.start; f < u.span.end; ++f) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double noise = c.feature_noise_sigma > 0.0 ? c.feature_noise_sigma * rng.normal() : 0.0;
          values.push_back(static_cast<float>(proto[d] + noise));
        }
      }
    }

    Utterance utt;
    utt.id = id;
    utt.features = FeatureMatrix(static_cast<std::size_t>(frame), dim, std::move(values));
    for (const auto& u : decode(truth, c, rng)) {
      utt.symbols.push_back(u.symbol);
      utt.spans.push_back(u.span);
    }
    for (const auto& u : truth) {
      g.unit_symbols.push_back(u.symbol);
      g.unit_spans.push_back(u.span);
    }
    utterances.push_back(std::move(utt));
    gold.utterances.push_back(std::move(g));
  }

  return Corpus(c.feature_dim, c.alphabet_size, std::move(utterances), std::move(gold));
}

std::optional<int> gold_segment_label(const GoldAnnotation& gold, const Segment& segment) {
  const GoldUtterance* g = gold.find(segment.utterance_id);
  if (g == nullptr) return std::nullopt;
  std::optional<int> best;
  std::int64_t best_overlap = 0;
  for (const auto& t : g->tokens) {
    if (!t.is_word()) continue;
    const std::int64_t ov = overlap(t.span, segment.span);
    if (ov == 0) continue;
    if (2 * ov >= t.span.length() && 2 * ov >= segment.span.length() && ov > best_overlap) {
      best = t.word;
      best_overlap = ov;
    }
  }
  return best;
}

}  // namespace termforge
