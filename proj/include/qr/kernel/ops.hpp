#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qr/kernel/matrix.hpp"

namespace qr::kernel {

/// n_q x n_k table; true means query i may attend to key j.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t n_q, std::size_t n_k, bool allowed = true)
      : n_q_(n_q), n_k_(n_k), allowed_(n_q * n_k, allowed ? 1 : 0) {}

  static AttentionMask all(std::size_t n_q, std::size_t n_k) { return {n_q, n_k, true}; }
  /// Query i sees keys j <= i.
  static AttentionMask causal(std::size_t n);
  /// Every query sees exactly the valid keys.
  static AttentionMask keys(std::size_t n_q, std::span<const std::uint8_t> key_valid);

  std::size_t n_q() const { return n_q_; }
  std::size_t n_k() const { return n_k_; }
  bool allowed(std::size_t i, std::size_t j) const { return allowed_[i * n_k_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { allowed_[i * n_k_ + j] = v ? 1 : 0; }

 private:
  std::size_t n_q_ = 0;
  std::size_t n_k_ = 0;
  std::vector<std::uint8_t> allowed_;
};

struct AttentionCache {
  Matrix weights;  // n_q x n_k softmax weights, exactly 0 where masked
};

/// softmax(Q K^T / sqrt(d_k)) V with masked keys excluded from the softmax.
/// Throws on shape mismatch or a query row with no attendable key.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask,
                            AttentionCache* cache = nullptr);

struct AttentionGrads {
  Matrix dq, dk, dv;
};

AttentionGrads scaled_dot_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                             const AttentionCache& cache, const Matrix& dout);

inline constexpr double kLayerNormEpsilon = 1e-6;

struct LayerNormCache {
  Matrix normalized;            // (x - mean) / sqrt(var + eps)
  std::vector<double> inv_std;  // per row
};

/// Per-row normalization to zero mean and unit population variance, then
/// gain * x + bias. gain and bias are 1 x cols.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps = kLayerNormEpsilon,
                  LayerNormCache* cache = nullptr);

struct LayerNormGrads {
  Matrix dx, dgain, dbias;
};

LayerNormGrads layer_norm_backward(const Matrix& gain, const LayerNormCache& cache, const Matrix& dout);

struct FfnCache {
  Matrix input;
  Matrix hidden;  // ReLU(x W1 + b1)
};

/// ReLU(x W1 + b1) W2 + b2, row by row.
Matrix position_wise_ffn(const Matrix& x, const Matrix& w1, const Matrix& b1, const Matrix& w2, const Matrix& b2,
                         FfnCache* cache = nullptr);

struct FfnGrads {
  Matrix dx, dw1, db1, dw2, db2;
};

FfnGrads position_wise_ffn_backward(const Matrix& w1, const Matrix& w2, const FfnCache& cache, const Matrix& dout);

/// Numerically stable log-softmax of one row.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace qr::kernel
