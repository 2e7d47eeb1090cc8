#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tall {

// Derives a child seed from a base seed, a stream tag, and up to two indices.
// Every source of randomness in a run draws from a stream named this way, so
// any stage can be replayed in isolation.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 with explicit float/normal mappings. The raw engine output is
// pinned by the standard; the distributions here avoid the library-defined
// std::*_distribution transforms so streams are stable across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform double in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform double in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; caches the second deviate
  double normal();

  // uniform integer in [0, n), unbiased
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace tall
