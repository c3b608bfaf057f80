#ifndef STYLEREC_RNG_HPP_
#define STYLEREC_RNG_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace stylerec {

// All sampling in the project flows through this generator so that results
// are bit-identical across platforms and standard-library versions.
// Core primitive is SplitMix64 (Steele, Lea, Flood 2014); string hashing is
// 64-bit FNV-1a. Neither depends on implementation-defined behavior.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable hash of (seed, key) used for per-id split assignment and for
// fanning one user-facing seed out to independent sub-streams.
inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& key) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  std::uint64_t state = a ^ fnv1a64(key);
  return splitmix64(state);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derives an independent stream for a named purpose.
  Rng(std::uint64_t seed, const std::string& purpose)
      : state_(mix_seed(seed, purpose)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, n). Rejection sampling keeps the
  // distribution exact regardless of n.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace stylerec

#endif  // STYLEREC_RNG_HPP_
