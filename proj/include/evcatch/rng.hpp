#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace evcatch {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed; used to keep ball, clutter and
// campaign-episode randomness decoupled.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x5851F42D4C957F2DULL));
}

inline std::uint64_t episode_seed(std::uint64_t campaign_seed, int index) {
  return mix_seed(campaign_seed, 0xE715ULL + static_cast<std::uint64_t>(index));
}

// Seeded generator with explicit floating conversions so results do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive range
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(gen_() % span);
  }

  double gaussian() {
    const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// Counter-based normal draw: the value for a given (seed, a, b) triple is
// independent of evaluation order, which keeps campaign episodes identical
// across trigger modes and replay paths.
inline double hash_gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) + a) + b);
  const double u1 = static_cast<double>((h >> 11) + 1) * 0x1.0p-53;  // (0,1]
  h = splitmix64(h + 0x9E3779B97F4A7C15ULL);
  const double u2 = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace evcatch
