#include "xlkb/rng.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace xlkb {

std::vector<std::size_t> uniform_sample_without_replacement(std::size_t n, std::size_t k,
                                                            Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (k > n) {
    k = n;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.next_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t k, Rng& rng) {
  const std::size_t n = weights.size();
  bool all_zero = true;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("sampling weights must be finite and non-negative");
    }
    if (w > 0.0) {
      all_zero = false;
    }
  }
  if (k == 0 || n == 0) {
    return {};
  }
  if (all_zero) {
    return uniform_sample_without_replacement(n, k, rng);
  }

  struct Keyed {
    double key;
    double u;
    std::size_t index;
  };
  std::vector<Keyed> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_double_open();
    // log(u) <= 0, so larger weights push the key toward 0 (the maximum).
    // Zero weight maps to -inf: never selected while positive-weight
    // candidates remain.
    const double key = weights[i] > 0.0 ? std::log(u) / weights[i]
                                        : -std::numeric_limits<double>::infinity();
    keyed[i] = Keyed{key, u, i};
  }
  if (k > n) {
    k = n;
  }
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(),
                    [](const Keyed& a, const Keyed& b) {
                      if (a.key != b.key) return a.key > b.key;
                      if (a.u != b.u) return a.u > b.u;
                      return a.index < b.index;
                    });
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = keyed[i].index;
  }
  return out;
}

}  // namespace xlkb
