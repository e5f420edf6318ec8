#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "streamtune/errors.hpp"

namespace streamtune {

// 64-bit FNV-1a.  std::hash is not stable across implementations; this is.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 finalizer; good avalanche, used for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable child seed from (parent seed, salt word).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix64(seed ^ mix64(salt));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) {
  return derive_seed(seed, fnv1a64(salt));
}

/// Deterministic RNG.  Engine is mt19937_64 (bit-stable everywhere); the
/// distributions are hand-rolled because the std:: ones are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], inclusive.  Modulo bias is < 2^-40 for the
  /// range sizes used here and keeping the draw single-call keeps replay easy.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw InvalidArgumentError("uniform_int: lo > hi");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

  /// Log-uniform over [lo, hi], lo > 0.
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Standard normal via Box-Muller (one value per call; the twin is dropped
  /// so the draw count stays predictable).
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// N(0, sigma^2) truncated to +-clip*sigma by rejection.
  double truncated_gaussian(double sigma, double clip = 3.0) {
    if (sigma <= 0.0) return 0.0;
    for (;;) {
      const double z = gaussian();
      if (std::abs(z) <= clip) return z * sigma;
    }
  }

 private:
  std::mt19937_64 eng_;
};

// Two-sided 95% Student-t critical values, df = 1..100; beyond the table the
// normal quantile is used.  Values precomputed to 12 digits.
inline constexpr std::array<double, 100> kStudentT975 = {
    12.7062047364, 4.3026527297,  3.18244630528, 2.7764451052,  2.57058183564,
    2.44691185114, 2.36462425159, 2.3060041352,  2.26215716285, 2.22813885196,
    2.20098516008, 2.17881282966, 2.16036865646, 2.14478668792, 2.13144954556,
    2.11990529922, 2.10981557783, 2.10092204024, 2.09302405441, 2.08596344727,
    2.07961384473, 2.0738730679,  2.06865761042, 2.06389856163, 2.05953855275,
    2.05552943864, 2.05183051648, 2.0484071418,  2.04522964213, 2.0422724563,
    2.0395134464,  2.03693334346, 2.03451529745, 2.03224450932, 2.03010792825,
    2.02809400098, 2.02619246303, 2.02439416391, 2.02269092004, 2.02107539031,
    2.01954097044, 2.01808170282, 2.01669219923, 2.01536757444, 2.01410338888,
    2.01289559892, 2.01174051373, 2.01063475762, 2.00957523713, 2.0085591121,
    2.00758377032, 2.00664680506, 2.00574599532, 2.00487928819, 2.00404478329,
    2.00324071885, 2.00246545929, 2.00171748415, 2.00099537809, 2.00029782201,
    1.99962358499, 1.99897151703, 1.99834054252, 1.99772965432, 1.99713790839,
    1.99656441895, 1.99600835403, 1.99546893143, 1.99494541511, 1.99443711177,
    1.99394336785, 1.99346356666, 1.99299712589, 1.99254349518, 1.992102154,
    1.99167260964, 1.99125439539, 1.99084706881, 1.99045021023, 1.99006342125,
    1.98968632346, 1.98931855714, 1.98895978018, 1.98860966698, 1.98826790748,
    1.98793420624, 1.98760828159, 1.98728986483, 1.98697869951, 1.9866745407,
    1.98637715442, 1.98608631695, 1.98580181435, 1.98552344187, 1.98525100351,
    1.98498431153, 1.98472318603, 1.98446745443, 1.98421695151, 1.98397151845,
};

/// t critical value for a two-sided 95% interval with `df` degrees of freedom.
inline double student_t_975(int df) {
  if (df < 1) throw InvalidArgumentError("student_t_975: df < 1");
  if (df <= 100) return kStudentT975[static_cast<std::size_t>(df - 1)];
  return 1.95996398454;  // normal approximation past the table
}

}  // namespace streamtune
