#pragma once

// Counter-based random streams.
//
// Every random draw in the library comes from a Philox4x32-10 stream keyed by
// the user seed and addressed by a 64-bit stream id. Stream ids are derived
// from (replication, substream) pairs, so any replication can be regenerated
// in isolation and results do not depend on how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace wiplab {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using counter_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 2) {
      refill();
    }
    return buffer_[pos_++];
  }

  // Raw block function, exposed for known-answer tests.
  static counter_type block(counter_type ctr, key_type key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  void refill() {
    const counter_type ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                           static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = block(ctr, key_);
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    ++counter_;
    pos_ = 0;
  }

  key_type key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<result_type, 2> buffer_{};
  int pos_ = 2;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stream id for substream `sub` of replication `rep`.
inline std::uint64_t stream_id(std::uint64_t rep, std::uint64_t sub) {
  return splitmix64(splitmix64(rep) ^ (sub * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

inline Philox4x32 make_engine(std::uint64_t seed, std::uint64_t rep, std::uint64_t sub) {
  return Philox4x32(seed, stream_id(rep, sub));
}

/// Uniform on the open interval (0, 1).
template <class Engine>
double uniform_open(Engine& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

template <class Engine>
double standard_normal(Engine& eng) {
  // Polar method; keeps the draw sequence independent of the standard library.
  for (;;) {
    const double u = 2.0 * uniform_open(eng) - 1.0;
    const double v = 2.0 * uniform_open(eng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

}  // namespace wiplab
