#pragma once

#include <cstdint>

namespace nibblematch {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic, splittable generator (xoshiro256++ seeded through SplitMix64).
// Substreams are derived from the root seed, not the live state, so handing
// out streams for edge selection, waste selection and per-trial resampling
// never perturbs the parent sequence. Output is identical on every platform,
// which the byte-reproducibility contracts of the reports rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_unit() < p; }

  // Uniform integer in [0, n), n >= 1. Unbiased (Lemire rejection).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Independent substream labelled by `stream`; same (seed, stream) always
  // yields the same sequence.
  Rng split(std::uint64_t stream) const {
    std::uint64_t sm = root_ ^ (0x6a09e667f3bcc909ULL + stream);
    std::uint64_t derived = detail::splitmix64(sm);
    return Rng(derived ^ detail::splitmix64(sm));
  }

  std::uint64_t root_seed() const { return root_; }

 private:
  std::uint64_t root_;
  std::uint64_t s_[4];
};

}  // namespace nibblematch
