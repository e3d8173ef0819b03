// aratts/rng.h

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ARATTS_RNG_H_
#define ARATTS_RNG_H_

#include <cmath>
#include <cstdint>
#include <string>

namespace aratts {

// CounterRng: a keyed counter-based generator.  Every draw is
//
//   u64(i) = splitmix64(key ^ rotl(stream, 17) ^ (i * 0x9E3779B97F4A7C15))
//
// where splitmix64 is Steele/Lea/Flood's finalizer:
//
//   z = x + 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// The full output sequence is a pure function of (key, stream), so masks and
// initializations are reproducible bit-for-bit across runs and platforms.
// Independent streams (per parameter, per training step, ...) are obtained by
// varying `stream` under one experiment `key`.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key, uint64_t stream = 0)
      : key_(key), stream_(stream), counter_(0), have_spare_(false),
        spare_(0.0) {}

  // Derives a stream id from a label, e.g. a parameter name.
  static uint64_t StreamOf(const std::string &label) {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  uint64_t NextU64() {
    uint64_t x = key_ ^ Rotl(stream_, 17) ^
                 (counter_ * 0x9E3779B97F4A7C15ull);
    ++counter_;
    return SplitMix64(x);
  }

  // Uniform in [0, 1) with 53 random bits.
  double NextUniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draws are paired and cached.
  double NextGaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = NextUniform();
    double u2 = NextUniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  bool NextBernoulli(double p) { return NextUniform() < p; }

  // Uniform integer in [0, n), n > 0.  Modulo bias is < 2^-53 for the n used
  // here (dataset sizes, symbol counts).
  uint64_t NextBelow(uint64_t n) {
    return static_cast<uint64_t>(NextUniform() * static_cast<double>(n));
  }

 private:
  static uint64_t Rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static uint64_t SplitMix64(uint64_t x) {
    uint64_t z = x + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t stream_;
  uint64_t counter_;
  bool have_spare_;
  double spare_;
};

}  // namespace aratts

#endif  // ARATTS_RNG_H_
