#pragma once

// Seeded randomness.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Standard distributions are not portable, so conversions to
// doubles and bounded integers are done here:
//   uniform01   = (next() >> 11) * 2^-53
//   below(n)    = rejection sampling on next() (no modulo bias)
// Independent streams come from split(id), which seeds a fresh generator
// with splitmix64(seed ^ splitmix64(id)).

#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ynn/error.hpp"
#include "ynn/numerics.hpp"

namespace ynn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ValidationError("SeededRng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  SeededRng split(std::uint64_t stream) const {
    return SeededRng(splitmix64(seed_ ^ splitmix64(stream)));
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(p));
    return p;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Entries drawn in row-major order.
inline Matrix uniform_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double lo,
                             double hi) {
  if (lo > hi) {
    throw ValidationError("uniform_matrix: lo > hi");
  }
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace ynn
