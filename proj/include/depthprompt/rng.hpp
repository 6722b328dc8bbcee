#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dp {

// splitmix64 step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

// Deterministic RNG. All conversions from raw bits are spelled out here so
// that sequences do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Integer drawn log-uniformly from [lo, hi]; lo == hi is the degenerate
  // fixed draw.
  int log_uniform_int(int lo, int hi) {
    if (lo >= hi) return lo;
    double u = uniform();
    double v = std::exp(std::log(static_cast<double>(lo)) +
                        u * (std::log(static_cast<double>(hi) + 1.0) -
                             std::log(static_cast<double>(lo))));
    int n = static_cast<int>(std::floor(v));
    if (n < lo) n = lo;
    if (n > hi) n = hi;
    return n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dp
