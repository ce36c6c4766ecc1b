/*
 * Copyright 2026 The oobcurve Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OOBCURVE_RANDOM_H_
#define OOBCURVE_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace oobcurve {

using RandomEngine = std::mt19937_64;

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Splittable seed derivation: the seed of sub-stream `stream` of `master`.
// Distinct (master, stream) pairs give statistically independent engines, so
// per-tree streams do not depend on the order in which trees are trained.
constexpr uint64_t DeriveSeed(uint64_t master, uint64_t stream) {
  return Mix64(Mix64(master) ^ Mix64(stream + 0x632be59bd9b4e019ULL));
}

// Stable 64-bit FNV-1a hash, used to key seed streams by name.
constexpr uint64_t HashName(std::string_view name) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform integer in [0, bound). Lemire's multiply-shift with rejection; the
// result only depends on the engine output, not on the standard library.
inline uint64_t UniformIndex(RandomEngine& rng, uint64_t bound) {
  if (bound <= 1) return 0;
  const uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const uint64_t x = rng();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    if (static_cast<uint64_t>(m) >= threshold) {
      return static_cast<uint64_t>(m >> 64);
    }
  }
}

// Uniform double in [0, 1) with 53 bits of precision.
inline double UniformUnit(RandomEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace oobcurve

#endif  // OOBCURVE_RANDOM_H_
