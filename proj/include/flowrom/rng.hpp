#pragma once

// Deterministic random streams for the synthetic demo models. The generator
// is pinned down to the bit level (SplitMix64 integers, Box-Muller normals,
// column-major matrix fill) so that a seed identifies one model forever,
// independent of platform and standard library.

#include "flowrom/linalg.hpp"

#include <cstdint>

namespace flowrom {

/// SplitMix64 (Steele, Lea, Flood 2014 mixing constants).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1], for logarithms.
  double next_double_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Standard normal stream via Box-Muller on SplitMix64 uniforms. Draws come
/// in pairs; the sine component is cached and returned on the next call.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = gen_.next_double_open();
    const double u2 = gen_.next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Fills a rows x cols matrix in column-major entry order.
  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = next();
    }
    return m;
  }

 private:
  SplitMix64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flowrom
