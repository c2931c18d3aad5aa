// Copyright (c) 2026 The sslprof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSLPROF_RNG_H_
#define SSLPROF_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace sslprof {

using Rng = std::mt19937_64;

// FNV-1a, used to turn a stream label into seed material.
constexpr std::uint64_t HashLabel(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Independent generator for one component, derived from the root seed by a
// fixed label. Changing how one component consumes randomness never shifts
// another component's stream.
inline Rng DeriveStream(std::uint64_t root_seed, std::string_view label) {
  const std::uint64_t h = HashLabel(label);
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed),
                    static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

}  // namespace sslprof

#endif  // SSLPROF_RNG_H_
