#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace torspec::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based draw: value depends only on (seed, index, lane), so parallel
/// loops can draw independently of iteration order and thread count.
inline std::uint64_t at(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
  std::uint64_t s = seed ^ (index * 0xd1342543de82ef95ULL) ^ (lane * 0xaf251af3b0f025b5ULL);
  splitmix64(s);
  return splitmix64(s);
}

inline double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
  return static_cast<double>(at(seed, index, lane) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter lanes.
inline double normal(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
  const double u1 = uniform01(seed, index, 2 * lane);
  const double u2 = uniform01(seed, index, 2 * lane + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-60));
  return radius * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential stream for code that wants stateful draws.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1 + 0x1.0p-60)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace torspec::rng
