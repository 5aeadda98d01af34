#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tearing {

/// 64-bit FNV-1a.
std::uint64_t tag_hash(std::string_view tag);

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so the mappings live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derive an independent stream from a master seed and a tag.
  static Rng derive(std::uint64_t seed, std::uint64_t tag);
  static Rng derive(std::uint64_t seed, std::string_view tag) { return derive(seed, tag_hash(tag)); }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace tearing
