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

#include "termforge/corpus.hpp"

#include <algorithm>
#include <sstream>

#include "binary_io.hpp"
#include <nlohmann/json.hpp>
#include "termforge/error.hpp"

namespace termforge {

namespace fs = std::filesystem;
using nlohmann::json;
using io::get_le;
using io::put_le;
using io::read_file;
using io::write_file;

std::int64_t overlap(const FrameSpan& a, const FrameSpan& b) {
  return std::max<std::int64_t>(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t dim)
    : frames_(frames), dim_(dim), values_(frames * dim, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t dim, std::vector<float> values)
    : frames_(frames), dim_(dim), values_(std::move(values)) {
  if (values_.size() != frames_ * dim_) {
    throw Error("feature matrix payload size does not match frames x dim");
  }
}

std::vector<std::int64_t> GoldUtterance::boundaries() const {
  std::vector<std::int64_t> out;
  if (tokens.empty()) return out;
  out.push_back(tokens.front().span.start);
  for (const auto& t : tokens) out.push_back(t.span.end);
  return out;
}

SymbolSeq GoldUtterance::subwords_in(const FrameSpan& span) const {
  SymbolSeq out;
  for (std::size_t i = 0; i < unit_spans.size(); ++i) {
    const auto& u = unit_spans[i];
    if (2 * overlap(u, span) >= u.length()) out.push_back(unit_symbols[i]);
  }
  return out;
}

const GoldUtterance* GoldAnnotation::find(const std::string& utterance_id) const {
  for (const auto& g : utterances) {
    if (g.utterance_id == utterance_id) return &g;
  }
  return nullptr;
}

namespace {

void validate_spans(const std::string& id, const std::vector<FrameSpan>& spans,
                    std::int64_t frames, const char* what) {
  std::int64_t prev_end = 0;
  for (const auto& s : spans) {
    if (s.start < prev_end || s.end <= s.start || s.end > frames) {
      throw Error("utterance " + id + ": " + what + " span [" + std::to_string(s.start) + ", " +
                  std::to_string(s.end) + ") overflows or overlaps");
    }
    prev_end = s.end;
  }
}

void validate_utterance(const Utterance& u, int feature_dim, int alphabet_size) {
  if (u.id.empty() || u.id.find('/') != std::string::npos) {
    throw Error("invalid utterance id '" + u.id + "'");
  }
  if (u.features.empty()) throw Error("utterance " + u.id + ": empty utterance");
  if (static_cast<int>(u.features.dim()) != feature_dim) {
    throw Error("utterance " + u.id + ": feature dim " + std::to_string(u.features.dim()) +
                " does not match corpus feature_dim " + std::to_string(feature_dim));
  }
  if (u.symbols.size() != u.spans.size()) {
    throw Error("utterance " + u.id + ": span/symbol length mismatch");
  }
  for (Symbol s : u.symbols) {
    if (s < 0 || s >= alphabet_size) {
      throw Error("utterance " + u.id + ": symbol " + std::to_string(s) + " outside alphabet");
    }
  }
  validate_spans(u.id, u.spans, static_cast<std::int64_t>(u.features.frames()), "transcription");
}

void validate_gold(const GoldUtterance& g, const Utterance& u) {
  const auto frames = static_cast<std::int64_t>(u.features.frames());
  if (g.unit_symbols.size() != g.unit_spans.size()) {
    throw Error("gold for utterance " + u.id + ": span/symbol length mismatch");
  }
  validate_spans(u.id, g.unit_spans, frames, "gold unit");
  std::vector<FrameSpan> token_spans;
  for (const auto& t : g.tokens) token_spans.push_back(t.span);
  validate_spans(u.id, token_spans, frames, "gold token");
  const auto b = g.boundaries();
  if (b.empty() || b.front() != 0 || b.back() != frames) {
    throw Error("gold for utterance " + u.id + ": tokens must tile [0, frames)");
  }
  for (std::size_t i = 1; i < g.tokens.size(); ++i) {
    if (g.tokens[i].span.start != g.tokens[i - 1].span.end) {
      throw Error("gold for utterance " + u.id + ": tokens must be contiguous");
    }
  }
}

}  // namespace

Corpus::Corpus(int feature_dim, int alphabet_size, std::vector<Utterance> utterances,
               std::optional<GoldAnnotation> gold)
    : feature_dim_(feature_dim),
      alphabet_size_(alphabet_size),
      utterances_(std::move(utterances)),
      gold_(std::move(gold)) {
  if (feature_dim_ <= 0) throw Error("feature_dim must be positive");
  if (alphabet_size_ <= 0) throw Error("alphabet_size must be positive");
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const auto& u = utterances_[i];
    validate_utterance(u, feature_dim_, alphabet_size_);
    if (!index_.emplace(u.id, i).second) throw Error("duplicate utterance id " + u.id);
  }
  if (gold_) {
    for (const auto& g : gold_->utterances) {
      auto it = index_.find(g.utterance_id);
      if (it == index_.end()) throw Error("gold references unknown utterance " + g.utterance_id);
      validate_gold(g, utterances_[it->second]);
    }
  }
}

std::size_t Corpus::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error("unknown utterance " + id);
  return it->second;
}

std::int64_t Corpus::total_frames() const {
  std::int64_t total = 0;
  for (const auto& u : utterances_) total += static_cast<std::int64_t>(u.features.frames());
  return total;
}

// ---------------------------------------------------------------------------
// Feature files

namespace {

std::string join_ints(const auto& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ' ';
    line += std::to_string(values[i]);
  }
  return line;
}

std::vector<std::int64_t> parse_ints(const std::string& line, const std::string& where) {
  std::vector<std::int64_t> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(where + ": malformed integer '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

void write_feature_file(const FeatureMatrix& m, const fs::path& path) {
  std::string bytes;
  bytes.reserve(16 + m.values().size() * 4);
  put_le<std::uint64_t>(bytes, m.frames());
  put_le<std::uint64_t>(bytes, m.dim());
  for (float v : m.values()) put_le<float>(bytes, v);
  write_file(path, bytes);
}

FeatureMatrix read_feature_file(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16) throw Error(path.string() + ": truncated feature header");
  const auto frames = get_le<std::uint64_t>(bytes.data());
  const auto dim = get_le<std::uint64_t>(bytes.data() + 8);
  if (dim != 0 && frames > (bytes.size() - 16) / 4 / dim) {
    throw Error(path.string() + ": payload shorter than header claims");
  }
  if (bytes.size() != 16 + frames * dim * 4) {
    throw Error(path.string() + ": payload size does not match header");
  }
  std::vector<float> values(frames * dim);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_le<float>(bytes.data() + 16 + 4 * i);
  return FeatureMatrix(frames, dim, std::move(values));
}

// ---------------------------------------------------------------------------
// Corpus directories

namespace {

json gold_to_json(const GoldAnnotation& gold) {
  json utts = json::array();
  for (const auto& g : gold.utterances) {
    json tokens = json::array();
    for (const auto& t : g.tokens) {
      tokens.push_back({{"word", t.word},
                        {"start", t.span.start},
                        {"end", t.span.end},
                        {"subwords", t.subwords}});
    }
    std::vector<std::int64_t> starts, ends;
    for (const auto& s : g.unit_spans) {
      starts.push_back(s.start);
      ends.push_back(s.end);
    }
    utts.push_back({{"id", g.utterance_id},
                    {"boundaries", g.boundaries()},
                    {"tokens", tokens},
                    {"units", {{"symbols", g.unit_symbols}, {"start", starts}, {"end", ends}}}});
  }
  return {{"vocabulary", gold.vocabulary}, {"utterances", utts}};
}

GoldAnnotation gold_from_json(const json& j) {
  GoldAnnotation gold;
  gold.vocabulary = j.at("vocabulary").get<std::vector<SymbolSeq>>();
  for (const auto& ju : j.at("utterances")) {
    GoldUtterance g;
    g.utterance_id = ju.at("id").get<std::string>();
    for (const auto& jt : ju.at("tokens")) {
      GoldToken t;
      t.word = jt.at("word").get<int>();
      t.span = {jt.at("start").get<std::int64_t>(), jt.at("end").get<std::int64_t>()};
      t.subwords = jt.at("subwords").get<SymbolSeq>();
      g.tokens.push_back(std::move(t));
    }
    const auto& units = ju.at("units");
    g.unit_symbols = units.at("symbols").get<SymbolSeq>();
    const auto starts = units.at("start").get<std::vector<std::int64_t>>();
    const auto ends = units.at("end").get<std::vector<std::int64_t>>();
    if (starts.size() != ends.size()) {
      throw Error("gold for utterance " + g.utterance_id + ": span/symbol length mismatch");
    }
    for (std::size_t i = 0; i < starts.size(); ++i) g.unit_spans.push_back({starts[i], ends[i]});
    if (ju.contains("boundaries") &&
        ju.at("boundaries").get<std::vector<std::int64_t>>() != g.boundaries()) {
      throw Error("gold for utterance " + g.utterance_id + ": boundaries disagree with tokens");
    }
    gold.utterances.push_back(std::move(g));
  }
  return gold;
}

}  // namespace

Corpus load_corpus(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("missing file " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw Error(manifest_path.string() + ": " + e.what());
  }
  const int feature_dim = manifest.at("feature_dim").get<int>();
  const int alphabet_size = manifest.at("alphabet_size").get<int>();
  std::vector<Utterance> utterances;
  for (const auto& jid : manifest.at("utterances")) {
    Utterance u;
    u.id = jid.get<std::string>();
    const fs::path feat = dir / (u.id + ".feat");
    const fs::path sym = dir / (u.id + ".sym");
    if (!fs::exists(feat)) throw IoError("utterance " + u.id + ": missing file " + feat.string());
    if (!fs::exists(sym)) throw IoError("utterance " + u.id + ": missing file " + sym.string());
    u.features = read_feature_file(feat);
    if (u.features.empty()) throw Error("utterance " + u.id + ": empty utterance");
    if (static_cast<int>(u.features.dim()) != feature_dim) {
      throw Error("utterance " + u.id + ": feature dim " + std::to_string(u.features.dim()) +
                  " does not match manifest feature_dim " + std::to_string(feature_dim));
    }
    std::istringstream lines(read_file(sym));
    std::string l1, l2, l3;
    std::getline(lines, l1);
    std::getline(lines, l2);
    std::getline(lines, l3);
    const std::string where = "utterance " + u.id;
    for (auto v : parse_ints(l1, where)) u.symbols.push_back(static_cast<Symbol>(v));
    const auto starts = parse_ints(l2, where);
    const auto ends = parse_ints(l3, where);
    if (starts.size() != ends.size() || starts.size() != u.symbols.size()) {
      throw Error(where + ": span/symbol length mismatch");
    }
    for (std::size_t i = 0; i < starts.size(); ++i) u.spans.push_back({starts[i], ends[i]});
    utterances.push_back(std::move(u));
  }
  std::optional<GoldAnnotation> gold;
  const fs::path gold_path = dir / "gold.json";
  if (fs::exists(gold_path)) {
    try {
      gold = gold_from_json(json::parse(read_file(gold_path)));
    } catch (const json::exception& e) {
      throw Error(gold_path.string() + ": " + e.what());
    }
  }
  return Corpus(feature_dim, alphabet_size, std::move(utterances), std::move(gold));
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  json ids = json::array();
  for (const auto& u : corpus.utterances()) ids.push_back(u.id);
  const json manifest = {{"feature_dim", corpus.feature_dim()},
                         {"alphabet_size", corpus.alphabet_size()},
                         {"utterances", ids}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& u : corpus.utterances()) {
    write_feature_file(u.features, dir / (u.id + ".feat"));
    std::vector<std::int64_t> starts, ends;
    for (const auto& s : u.spans) {
      starts.push_back(s.start);
      ends.push_back(s.end);
    }
    write_file(dir / (u.id + ".sym"),
               join_ints(u.symbols) + "\n" + join_ints(starts) + "\n" + join_ints(ends) + "\n");
  }
  if (corpus.gold()) {
    write_file(dir / "gold.json", gold_to_json(*corpus.gold()).dump() + "\n");
  } else if (fs::exists(dir / "gold.json")) {
    fs::remove(dir / "gold.json");
  }
}

FeatureMatrix slice_features(const Utterance& utterance, const FrameSpan& span) {
  const auto frames = static_cast<std::int64_t>(utterance.features.frames());
  if (span.start < 0 || span.end <= span.start || span.end > frames) {
    throw Error("utterance " + utterance.id + ": span [" + std::to_string(span.start) + ", " +
                std::to_string(span.end) + ") out of range");
  }
  const std::size_t dim = utterance.features.dim();
  const auto& all = utterance.features.values();
  std::vector<float> values(all.begin() + span.start * static_cast<std::int64_t>(dim),
                            all.begin() + span.end * static_cast<std::int64_t>(dim));
  return FeatureMatrix(static_cast<std::size_t>(span.length()), dim, std::move(values));
}

FeatureMatrix slice_features(const Corpus& corpus, const Segment& segment) {
  return slice_features(corpus.utterance(segment.utterance_id), segment.span);
}

void write_segments(const SegmentSet& segments, const fs::path& path) {
  std::string out;
  for (const auto& s : segments) {
    const json j = {{"id", s.id},
                    {"utterance", s.utterance_id},
                    {"span", {s.span.start, s.span.end}},
                    {"symbols", s.symbols}};
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

SegmentSet read_segments(const fs::path& path) {
  std::istringstream in(read_file(path));
  SegmentSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Segment s;
      s.id = j.at("id").get<std::int64_t>();
      s.utterance_id = j.at("utterance").get<std::string>();
      const auto span = j.at("span").get<std::vector<std::int64_t>>();
      if (span.size() != 2) throw Error(path.string() + ": span must have two entries");
      s.span = {span[0], span[1]};
      s.symbols = j.at("symbols").get<SymbolSeq>();
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace termforge
