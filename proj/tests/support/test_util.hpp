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
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "termforge/baseline.hpp"
#include "termforge/corpus.hpp"

namespace testutil {

inline termforge::SymbolSeq random_seq(std::mt19937_64& g, std::size_t max_len, int alphabet,
                                       std::size_t min_len = 0) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  termforge::SymbolSeq s(len(g));
  for (auto& x : s) x = sym(g);
  return s;
}

inline termforge::Segment segment(std::int64_t id, termforge::SymbolSeq symbols, std::string utt = "u0",
                                  termforge::FrameSpan span = {0, 1}) {
  termforge::Segment s;
  s.id = id;
  s.utterance_id = std::move(utt);
  s.span = span;
  s.symbols = std::move(symbols);
  return s;
}

inline termforge::SegmentSet segments_from(const std::vector<termforge::SymbolSeq>& seqs) {
  termforge::SegmentSet out;
  for (std::size_t i = 0; i < seqs.size(); ++i) out.push_back(segment(static_cast<std::int64_t>(i), seqs[i]));
  return out;
}

inline termforge::Cluster cluster(std::int64_t id, std::vector<std::int64_t> members) {
  termforge::Cluster c;
  c.id = id;
  c.leader = members.empty() ? 0 : members.front();
  c.members = std::move(members);
  return c;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("termforge-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
