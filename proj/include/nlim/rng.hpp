#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace nlim {

// SplitMix64 (Steele, Lea, Flood 2014). Every random choice in corpus
// synthesis, initialization and batching goes through this stream so that
// artifacts are reproducible across standard libraries; std:: distributions
// are implementation-defined and are not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n must be > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  bool bernoulli(double p) noexcept { return p > 0.0 && uniform() < p; }

  // Independent child stream; the parent advances by one draw.
  Rng split() noexcept { return Rng(next() ^ 0x6a09e667f3bcc909ULL); }

  template <class T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace nlim
