#include "qr/kernel/init.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::kernel {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error("Rng::below: empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % n);
}

Matrix uniform_init(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw Error(fmt::format("uniform_init: need lo < hi, got [{}, {})", lo, hi));
  Matrix m(rows, cols);
  for (auto& v : m.values()) {
    v = rng.uniform(lo, hi);
    if (v >= hi) v = lo;  // rounding guard
  }
  return m;
}

Matrix orthogonal_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw Error("orthogonal_init: empty shape");
  // Work on a tall matrix whose columns get orthonormalized.
  const bool tall = rows >= cols;
  const std::size_t n = tall ? rows : cols;
  const std::size_t k = tall ? cols : rows;
  std::vector<std::vector<double>> basis(k, std::vector<double>(n));
  for (std::size_t c = 0; c < k; ++c) {
    auto& v = basis[c];
    for (;;) {
      for (auto& x : v) x = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += v[i] * basis[p][i];
          for (std::size_t i = 0; i < n; ++i) v[i] -= dot * basis[p][i];
        }
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (auto& x : v) x /= norm;
        break;
      }
    }
  }
  Matrix m(rows, cols);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      if (tall) {
        m(i, c) = basis[c][i];
      } else {
        m(c, i) = basis[c][i];
      }
    }
  return m;
}

}  // namespace qr::kernel
