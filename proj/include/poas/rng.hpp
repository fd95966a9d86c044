#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace poas {

// Deterministic generator used wherever noise is drawn. The standard
// library's normal_distribution is implementation defined, which would tie
// simulated timings to the toolchain; splitmix64 plus Box-Muller keeps
// every run reproducible bit for bit.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + std::int64_t(next_u64() % std::uint64_t(hi - lo + 1));
  }

  // Standard normal via Box-Muller; one draw per call, no cached spare, so
  // the stream position never depends on call parity.
  double next_gaussian() {
    double u1 = 1.0 - next_unit();  // (0, 1], keeps the log finite
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Stream for one named consumer. The name is mixed into the seed so that
  // adding or removing a device never shifts the draws the others see.
  static Rng for_stream(std::uint64_t master_seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    for (char ch : name) {
      h ^= std::uint64_t(static_cast<unsigned char>(ch));
      h *= 1099511628211ULL;
    }
    return Rng(master_seed ^ h);
  }

private:
  std::uint64_t state_;
};

}  // namespace poas
