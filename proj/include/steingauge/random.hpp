#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace steingauge {

// Stream-splitting scheme
// -----------------------
// Every random draw in the library descends from one 64-bit root seed. A
// stream is identified by the root seed plus a short list of integer tags
// (purpose, problem size, block index, ...). `derive_seed` folds the tags into
// the root with the SplitMix64 finaliser, and the folded value seeds a
// xoshiro256** generator. Work is always partitioned into fixed blocks that
// own one stream each, so the values produced never depend on how blocks are
// scheduled onto threads.

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64_mix(root);
  for (std::uint64_t t : tags) h = splitmix64_mix(h ^ splitmix64_mix(t + 0x632BE59BD9B4E019ULL));
  return h;
}

// Stream purposes.
namespace stream_tag {
inline constexpr std::uint64_t kSampling = 1;
inline constexpr std::uint64_t kBootstrap = 2;
inline constexpr std::uint64_t kProfileOuter = 3;
inline constexpr std::uint64_t kProfileInner = 4;
inline constexpr std::uint64_t kKernelMoments = 5;
inline constexpr std::uint64_t kBattery = 6;
inline constexpr std::uint64_t kStatistic = 7;
inline constexpr std::uint64_t kHarness = 8;
}  // namespace stream_tag

// xoshiro256** 1.0 (Blackman & Vigna), seeded through SplitMix64.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) {
    std::uint64_t z = seed;
    for (auto& s : state_) {
      s = splitmix64_mix(z);
      z += 0x9E3779B97F4A7C15ULL;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    const u128 m = static_cast<u128>((*this)()) * bound;
    return static_cast<std::uint64_t>(m >> 64);
  }

  // One fair bit, drawn from a 64-bit reservoir.
  bool bit() {
    if (bits_left_ == 0) {
      reservoir_ = (*this)();
      bits_left_ = 64;
    }
    const bool b = (reservoir_ & 1ULL) != 0;
    reservoir_ >>= 1;
    --bits_left_;
    return b;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4]{};
  std::uint64_t reservoir_ = 0;
  int bits_left_ = 0;
};

inline Xoshiro256 make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  return Xoshiro256(derive_seed(root, tags));
}

}  // namespace steingauge
