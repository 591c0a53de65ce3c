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

// nlohmann adapters for the public config structs. Private to the library.

#include <nlohmann/json.hpp>
#include "termforge/synthgen.hpp"

namespace termforge {

inline void to_json(nlohmann::json& j, const IntRange& r) { j = nlohmann::json::array({r.min, r.max}); }

inline void from_json(const nlohmann::json& j, IntRange& r) {
  if (!j.is_array() || j.size() != 2) throw nlohmann::json::type_error::create(302, "range must be [min, max]", &j);
  r.min = j[0].get<int>();
  r.max = j[1].get<int>();
}

/// Assigns j[key] to out when present.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->template get<T>();
}

}  // namespace termforge
