// Copyright 2026 The MFO Authors
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

// Seeded randomness. Two flavours:
//  * CounterStream: a stateless counter-based generator. The value drawn for
//    (seed, k, j, i) does not depend on how many other draws happened before,
//    so per-agent Bernoulli draws are independent of loop order.
//  * SeededEngine: std::mt19937_64 with hand-written uniform/exponential
//    transforms, so sampled values are identical across standard libraries.

#ifndef MFO_RNG_HPP_
#define MFO_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace mfo {

inline std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Maps the top 53 bits of a 64-bit word to [0, 1).
inline double ToUnitInterval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class CounterStream {
 public:
  explicit CounterStream(std::uint64_t seed) : key_(SplitMix64(seed)) {}

  std::uint64_t Bits(std::uint64_t k, std::uint64_t j, std::uint64_t i) const {
    std::uint64_t h = SplitMix64(key_ ^ SplitMix64(k));
    h = SplitMix64(h ^ SplitMix64(j + 0x632be59bd9b4e019ULL));
    return SplitMix64(h ^ SplitMix64(i + 0x85157af5ULL));
  }

  double Uniform(std::uint64_t k, std::uint64_t j, std::uint64_t i) const {
    return ToUnitInterval(Bits(k, j, i));
  }

  /// Bern(p) draw; p >= 1 always succeeds and p <= 0 never does.
  bool Bernoulli(double p, std::uint64_t k, std::uint64_t j,
                 std::uint64_t i) const {
    return Uniform(k, j, i) < p;
  }

 private:
  std::uint64_t key_;
};

class SeededEngine {
 public:
  explicit SeededEngine(std::uint64_t seed) : engine_(seed) {}

  double Uniform() { return ToUnitInterval(engine_()); }
  double Uniform(double a, double b) { return a + (b - a) * Uniform(); }
  double Exponential(double rate) { return -std::log1p(-Uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mfo

#endif  // MFO_RNG_HPP_
