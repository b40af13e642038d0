#include "qr/kernel/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::kernel {

AdamState::AdamState(const AdamConfig& cfg, std::span<const Matrix* const> params) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Matrix* p : params) {
    m.emplace_back(p->rows(), p->cols());
    v.emplace_back(p->rows(), p->cols());
  }
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw Error(fmt::format("adam_step: {} params, {} grads, {} moments", params.size(), grads.size(), state.m.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.m[i]) ||
        !params[i]->same_shape(state.v[i])) {
      throw Error(fmt::format("adam_step: shape mismatch at parameter {}", i));
    }
  }
  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    const auto g = grads[i]->values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      p[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace qr::kernel
