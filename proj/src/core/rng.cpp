#include "rng.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace slc {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t SeededRng::next_u64() {
  return splitmix64(seed_ + (counter_++) * kGamma);
}

double SeededRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  require(n > 0, ErrorCode::InvalidArgument, "SeededRng::below: n must be positive");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

std::int64_t SeededRng::range(std::int64_t lo, std::int64_t hi) {
  require(hi >= lo, ErrorCode::InvalidArgument, "SeededRng::range: hi < lo");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(below(span));
}

double SeededRng::normal() {
  double u1 = uniform01();
  const double u2 = uniform01();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::derive(std::uint64_t stream) const {
  return SeededRng(splitmix64(seed_ ^ splitmix64(stream + 0x5EEDULL)));
}

}  // namespace slc
