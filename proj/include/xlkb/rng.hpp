#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace xlkb {

// Counter-based splittable PRNG. Output i of a stream is a pure hash of
// (key, i), so substreams derived from the same origin key are stable no
// matter how many values other streams have consumed. Substream derivation
// uses only the origin key, never the counter, which makes per-label and
// per-anchor streams independent of iteration order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x5851F42D4C957F2Dull)) {}

  Rng substream(std::string_view name) const {
    std::uint64_t h = 0xCBF29CE484222325ull ^ key_;
    for (const char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ull;  // FNV-1a prime
    }
    return Rng(from_key{}, mix(h));
  }

  Rng substream(std::uint64_t salt) const {
    return Rng(from_key{}, mix(key_ ^ mix(salt)));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform in [0, bound), unbiased via rejection. bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t zone = (std::numeric_limits<std::uint64_t>::max() / bound) * bound;
    std::uint64_t x = next_u64();
    while (x >= zone) {
      x = next_u64();
    }
    return x % bound;
  }

  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_below(static_cast<std::uint64_t>(n)));
  }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = next_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  struct from_key {};
  Rng(from_key, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Draws k distinct indices from [0, n) uniformly, in selection order
// (partial Fisher-Yates). Returns all n indices if k >= n.
std::vector<std::size_t> uniform_sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

// Weighted sampling without replacement with inclusion following the
// sequential scheme: draw one index with probability proportional to its
// weight, remove it, repeat. Implemented with exponential keys
// (key_i = log(u_i) / w_i, take the k largest), which is equivalent.
// Weights must be finite and non-negative. If every weight is zero the
// draw falls back to uniform sampling over the pool. Returns the whole
// pool (in key order) when k >= n.
std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t k, Rng& rng);

}  // namespace xlkb
