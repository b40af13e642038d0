#pragma once

#include <cstdint>
#include <random>

#include "qr/kernel/matrix.hpp"

namespace qr::kernel {

/// Seeded generator. Draws are built from raw mt19937_64 output so sequences
/// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline constexpr double kUniformInitBound = 0.1;

/// i.i.d. samples from [lo, hi). Throws unless lo < hi.
Matrix uniform_init(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

/// Orthonormal columns when rows >= cols, orthonormal rows otherwise.
/// Gram-Schmidt (with one re-orthogonalization pass) over a Gaussian draw.
Matrix orthogonal_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace qr::kernel
