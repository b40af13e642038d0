#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qr/kernel/matrix.hpp"

namespace qr::kernel {

struct AdamConfig {
  double learning_rate = 0.0004;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates mirroring a parameter list, plus the step count.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(const AdamConfig& cfg, std::span<const Matrix* const> params);
};

/// One bias-corrected Adam update of every parameter; increments state.t.
/// Throws if params, grads and moments disagree in count or shape.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamState& state);

}  // namespace qr::kernel
