#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sdec {

/// Named sub-streams derived from a single run seed. Holding one stream
/// fixed while varying another keeps regimes comparable.
enum class Stream : std::uint64_t {
  init = 1,
  data = 2,
  mixing = 3,
  gumbel = 4,
  task = 5,
};

/// Seeded random source. Draws are built from raw 64-bit engine output so
/// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::init)
      : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x5dec5decU};
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sdec
