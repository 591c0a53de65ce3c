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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "termforge/baseline.hpp"
#include "termforge/embednet.hpp"
#include "termforge/recluster.hpp"
#include "termforge/seqmatch.hpp"
#include "termforge/synthgen.hpp"

using namespace termforge;

namespace {

SymbolSeq random_seq(std::mt19937_64& g, std::size_t len, int alphabet) {
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  SymbolSeq s(len);
  for (auto& x : s) x = sym(g);
  return s;
}

SynthConfig bench_corpus_config(int vocabulary) {
  SynthConfig c;
  c.seed = 3;
  c.vocabulary_size = vocabulary;
  c.occurrences_per_word = 10;
  c.words_per_utterance_range = {1, 3};
  c.symbol_substitution_rate = 0.1;
  c.feature_noise_sigma = 0.3;
  return c;
}

NetArch bench_arch() {
  NetArch a;
  a.input_frames = 32;
  a.feature_dim = 40;
  a.conv_channels = {16, 32, 32};
  a.fc1_units = 128;
  a.fc2_units = 64;
  a.embedding_dim = 40;
  return a;
}

}  // namespace

static void BM_Levenshtein(benchmark::State& state) {
  std::mt19937_64 g(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const SymbolSeq a = random_seq(g, n, 55), b = random_seq(g, n, 55);
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Levenshtein)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

static void BM_LocalAlign(benchmark::State& state) {
  std::mt19937_64 g(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  SymbolSeq a = random_seq(g, n, 55), b = random_seq(g, n, 55);
  // Plant a shared run so there is something to align.
  const SymbolSeq word = random_seq(g, 6, 55);
  std::copy(word.begin(), word.end(), a.begin() + static_cast<std::ptrdiff_t>(n / 3));
  std::copy(word.begin(), word.end(), b.begin() + static_cast<std::ptrdiff_t>(n / 2));
  const AlignScoring scoring;
  for (auto _ : state) benchmark::DoNotOptimize(local_align(a, b, scoring));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LocalAlign)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

static void BM_DiscoverSegments(benchmark::State& state) {
  const Corpus corpus = generate(bench_corpus_config(static_cast<int>(state.range(0))));
  const AlignScoring scoring;
  for (auto _ : state) benchmark::DoNotOptimize(discover_segments(corpus, scoring));
  state.counters["utterances"] = static_cast<double>(corpus.utterances().size());
}
BENCHMARK(BM_DiscoverSegments)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_LeaderCluster(benchmark::State& state) {
  std::mt19937_64 g(4);
  std::vector<SymbolSeq> words;
  for (int w = 0; w < 20; ++w) words.push_back(random_seq(g, 6, 55));
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::bernoulli_distribution flip(0.1);
  std::uniform_int_distribution<int> sym(0, 54);
  SegmentSet segs;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    Segment s;
    s.id = i;
    s.utterance_id = "u";
    s.span = {0, 1};
    s.symbols = words[pick(g)];
    for (auto& x : s.symbols) {
      if (flip(g)) x = sym(g);
    }
    segs.push_back(std::move(s));
  }
  const LeaderParams params;
  for (auto _ : state) benchmark::DoNotOptimize(leader_cluster(segs, params));
}
BENCHMARK(BM_LeaderCluster)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Forward(benchmark::State& state) {
  const NetworkParams p = init_params(bench_arch(), 5);
  std::mt19937_64 g(6);
  std::normal_distribution<double> nd;
  std::vector<double> x(static_cast<std::size_t>(p.arch.input_frames * p.arch.feature_dim));
  for (auto& v : x) v = nd(g);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, x));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

static void BM_BackwardTriplet(benchmark::State& state) {
  const NetworkParams p = init_params(bench_arch(), 7);
  std::mt19937_64 g(8);
  std::normal_distribution<double> nd;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> rows(3 * n,
                                        std::vector<double>(static_cast<std::size_t>(p.arch.input_frames * p.arch.feature_dim)));
  for (auto& r : rows) {
    for (auto& v : r) v = nd(g);
  }
  Batch batch;
  batch.kind = LossKind::kTriplet;
  batch.margin = 5.0;
  for (std::size_t k = 0; k < n; ++k) batch.triplets.push_back({rows[3 * k], rows[3 * k + 1], rows[3 * k + 2]});
  Gradient grad;
  for (auto _ : state) benchmark::DoNotOptimize(backward(p, batch, grad));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BackwardTriplet)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Hdbscan(benchmark::State& state) {
  std::mt19937_64 g(9);
  std::normal_distribution<double> nd;
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix pts(n, 40);
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = static_cast<double>(i % 20) * 3.0;
    for (std::size_t k = 0; k < 40; ++k) pts.at(i, k) = (k == i % 40 ? centre : 0.0) + nd(g);
  }
  HdbscanParams params;
  params.cluster_selection_epsilon = 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(hdbscan(pts, params, Extraction::kHybrid));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hdbscan)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
