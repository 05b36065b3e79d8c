#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "risp/complex_matrix.hpp"
#include "risp/errors.hpp"

namespace risp {

/// Counter-based generator: every sample is a hash of (seed, counter), so
/// streams are bit-identical across platforms and splittable for parallel
/// episode generation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (second variate discarded).
  double gaussian() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Circularly-symmetric complex Gaussian, per-entry variance `variance`.
  cplx cn(double variance) {
    if (variance < 0.0) throw DomainError("cn: variance must be >= 0");
    if (variance == 0.0) {
      // keep the stream position independent of the variance value
      next_u64();
      next_u64();
      return cplx(0.0, 0.0);
    }
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-variance * std::log(u1));
    return cplx(r * std::cos(2.0 * std::numbers::pi * u2),
                r * std::sin(2.0 * std::numbers::pi * u2));
  }

  /// Independent child stream; deterministic function of (seed, stream).
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0xD1B54A32D192ED03ULL)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Matrix of i.i.d. CN(0, variance) entries, row-major draw order.
inline ComplexMatrix sample_cn(std::size_t rows, std::size_t cols,
                               double variance, Rng& rng) {
  if (variance < 0.0) throw DomainError("sample_cn: variance must be >= 0");
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.cn(variance);
  return m;
}

}  // namespace risp
