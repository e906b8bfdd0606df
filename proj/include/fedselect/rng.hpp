// Copyright 2026 The fedselect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDSELECT_RNG_HPP_
#define FEDSELECT_RNG_HPP_

#include <cstdint>

namespace fedselect::rng {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Finalizer of the splitmix64 generator (Steele / Lea / Flood). Bijective
// on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// splitmix64 uniform stream. The whole generator is one 64-bit word, so
// states are trivially copyable and sequences are bit-identical across
// platforms (integer ops only).
class SplitMix64 {
 public:
  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Bernoulli draw via inverse transform. p <= 0 and p >= 1 are decided
  // without consuming a draw; callers rely on that to keep streams aligned
  // when a branch with probability 0 is skipped outright.
  bool bernoulli(double p) noexcept {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return next_double() < p;
  }

  // Uniform on the open interval (lo, hi); endpoint hits are redrawn.
  double uniform_open(double lo, double hi) noexcept {
    for (;;) {
      const double v = lo + (hi - lo) * next_double();
      if (v > lo && v < hi) return v;
    }
  }

  std::uint64_t state() const noexcept { return state_; }

  friend bool operator==(const SplitMix64&, const SplitMix64&) = default;

 private:
  std::uint64_t state_ = 0;
};

// Splitting rule for per-client streams:
//   seed_i = mix64(master ^ mix64((i + 1) * gamma))
// mix64 is a bijection and gamma is odd, so distinct client indices yield
// distinct stream seeds under any fixed master seed.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed,
                                    std::uint64_t index) noexcept {
  return mix64(master_seed ^ mix64((index + 1) * kGoldenGamma));
}

}  // namespace fedselect::rng

#endif  // FEDSELECT_RNG_HPP_
