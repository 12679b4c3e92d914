#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace slc {

/// Counter-based generator: the n-th output is splitmix64(seed + n * gamma).
/// Only integer arithmetic is involved, so streams are identical on every
/// platform. Floating-point draws are built from the top 53 bits.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform01();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer on [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal();

  /// Independent child stream keyed by `stream`; does not advance this one.
  SeededRng derive(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace slc
