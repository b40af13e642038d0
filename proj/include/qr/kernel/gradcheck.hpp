#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "qr/kernel/matrix.hpp"

namespace qr::kernel {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Relative error is |analytic - numeric| / max(|numeric|, floor); the floor
  // turns the check absolute for near-zero gradients.
  double denominator_floor = 1e-4;
  // 0 checks every entry; otherwise entries are visited with a stride.
  std::size_t max_entries_per_param = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients with central differences
/// (L(theta + eps) - L(theta - eps)) / 2 eps, perturbing params in place and
/// restoring them. loss must read the current parameter values. Throws on a
/// non-finite loss.
GradCheckResult finite_difference_check(const std::function<double()>& loss, std::span<Matrix* const> params,
                                        std::span<const Matrix* const> analytic,
                                        const GradCheckOptions& options = {});

}  // namespace qr::kernel
