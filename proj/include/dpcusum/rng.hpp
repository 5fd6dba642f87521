// Copyright 2026 The dpcusum Authors
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

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace dpcusum {

/// SplitMix64 finalizer; used only to derive generator keys.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
    for (auto& word : s_) word = splitmix64(seed);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform draw on the open interval (0, 1); never returns 0 or 1.
  constexpr double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Named sub-streams of one trial. Each lane is an independent generator.
enum class Lane : std::uint64_t {
  kData = 1,
  kStatNoise = 2,
  kThresholdNoise = 3,
};

/// Counter-based stream addressing: (master_seed, stream_id, lane) maps to a
/// fixed generator, so trial i produces the same numbers no matter which
/// worker runs it or in which order.
class RngStream {
 public:
  constexpr RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed), stream_id_(stream_id) {}

  constexpr std::uint64_t master_seed() const noexcept { return master_seed_; }
  constexpr std::uint64_t stream_id() const noexcept { return stream_id_; }

  constexpr Xoshiro256 lane(Lane lane) const noexcept { return lane_raw(static_cast<std::uint64_t>(lane)); }

  constexpr Xoshiro256 lane_raw(std::uint64_t lane) const noexcept {
    std::uint64_t state = master_seed_;
    std::uint64_t key = splitmix64(state);
    state = key ^ stream_id_;
    key = splitmix64(state);
    state = key ^ (lane * 0xd1b54a32d192ed03ULL);
    return Xoshiro256(splitmix64(state));
  }

  /// Child stream addressing; used to give independent experiments disjoint ids.
  constexpr RngStream child(std::uint64_t id) const noexcept {
    std::uint64_t state = master_seed_ ^ (stream_id_ * 0x9e3779b97f4a7c15ULL);
    std::uint64_t mixed = splitmix64(state);
    state = mixed ^ id;
    return RngStream(splitmix64(state), 0);
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
};

}  // namespace dpcusum
