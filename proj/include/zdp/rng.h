// Copyright 2026 The zdp Authors
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

#ifndef ZDP_RNG_H_
#define ZDP_RNG_H_

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace zdp {

// Counter-based generator. Draw i of a stream is a pure function of
// (seed, i): SplitMix64's finalizer applied to key(seed) + (i + 1) * golden.
// Normal variates use Box-Muller over two consecutive draws, so a fixed
// (seed, counter) reproduces the same sequence on any platform whose libm
// rounds log/sin/cos/sqrt identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : seed_(seed), key_(Mix(seed ^ 0x6a09e667f3bcc909ULL)), counter_(counter) {}

  // Independent stream derived from (seed, stream id), e.g. one per training
  // step. Streams never share a key unless the ids collide after mixing.
  static Rng Stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(Mix(seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1)) ^ stream_id);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t NextU64() {
    ++counter_;
    return Mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform on [0, 1).
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double UniformOpenZero() {
    return static_cast<double>((NextU64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Lemire-free modulo rejection.
  std::uint64_t UniformInt(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return x % n;
  }

  // Pair of independent standard normals (Box-Muller), returned as re/im.
  std::complex<double> StandardNormalPair() {
    const double u1 = UniformOpenZero();
    const double u2 = Uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  double StandardNormal() { return StandardNormalPair().real(); }

  static constexpr std::uint64_t Mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace zdp

#endif  // ZDP_RNG_H_
