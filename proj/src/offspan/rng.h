// Copyright 2026 The offspan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OFFSPAN_RNG_H_
#define OFFSPAN_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

// Distribution helpers with a fixed algorithm. The standard distributions are
// implementation-defined, which would make seeded splits and initializations
// differ between standard libraries.

namespace offspan {

using Rng = std::mt19937_64;

// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller.
inline double StandardNormal(Rng& rng) {
  double u1;
  do {
    u1 = UniformUnit(rng);
  } while (u1 <= 0.0);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename Container>
void Shuffle(Container& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = UniformIndex(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace offspan

#endif  // OFFSPAN_RNG_H_
