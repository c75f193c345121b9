#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace elinspect {

/**
 * Seedable random generator with portable derived draws.
 *
 * The engine is std::mt19937_64, which produces an identical raw stream on
 * every conforming implementation. The standard *distributions* do not share
 * that guarantee, so every mapping used by the project (bounded integers,
 * unit-interval reals, shuffles, subset sampling) is implemented here and
 * nowhere else. Two builds given the same seed draw identical sequences.
 */
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). Lemire multiply-shift with rejection; exact
  /// and unbiased for any n >= 1.
  std::uint64_t uniform_index(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// First k elements of a shuffled [0, n) index range, in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(k < n ? k : n);
    return idx;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace elinspect
