// Copyright 2026 The qtele Authors
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

#ifndef QTELE_RNG_HPP
#define QTELE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace qtele {

// Distributions are written out here instead of using <random> so that event
// streams are bit-identical across standard library implementations.

constexpr uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr uint64_t stream_key(uint64_t seed, uint64_t a, uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1342543de82ef95ULL + 1));
}

inline double to_unit(uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t key = 0) {
    uint64_t z = key;
    for (auto& w : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      w = splitmix64(z);
    }
  }
  Rng(uint64_t seed, uint64_t a, uint64_t b) : Rng(stream_key(seed, a, b)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }

  uint64_t operator()() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return to_unit((*this)()); }
  // Open interval (0, 1), safe for logarithms.
  double uniform_pos() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925 * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  // Number of failures before the first success, success probability q.
  uint64_t geometric(double q) {
    if (q >= 1.0) return 0;
    double g = std::floor(std::log(uniform_pos()) / std::log1p(-q));
    if (g > 9.0e18) return static_cast<uint64_t>(9.0e18);
    return static_cast<uint64_t>(g);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  int binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }

  // Inversion; intended for small means.
  uint64_t poisson(double mean) {
    if (mean <= 0) return 0;
    if (mean > 30) {
      double x = std::floor(mean + std::sqrt(mean) * normal() + 0.5);
      return x < 0 ? 0 : static_cast<uint64_t>(x);
    }
    double u = uniform(), p = std::exp(-mean), c = p;
    uint64_t k = 0;
    while (u > c && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      c += p;
    }
    return k;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qtele

#endif  // QTELE_RNG_HPP
