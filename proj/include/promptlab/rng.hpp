#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace plab {

inline constexpr uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

// FNV-1a over raw bytes. Used for seed derivation, the simulated-LM
// correctness predicate, and config hashing; must stay byte-stable across
// platforms (std::hash is not).
inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64_u64(uint64_t v, uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= static_cast<unsigned char>(v >> (8 * i));
    h *= kFnvPrime;
  }
  return h;
}

// Independent, reproducible sub-stream seeds: mix(base, tag, index).
inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0) {
  return fnv1a64_u64(index, fnv1a64(tag, fnv1a64_u64(base)));
}

// splitmix64: tiny, portable, good-enough statistics for sampling and
// bootstrap work. Chosen over std engines+distributions because the draw
// sequence must be identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, n) via rejection.
  uint64_t next_below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Partial Fisher-Yates: k distinct indices from [0, n), in drawn order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
    if (k > n) k = n;
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + static_cast<size_t>(next_below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace plab
