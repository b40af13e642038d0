#include "qr/kernel/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::kernel {

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m(n, n, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, true);
  return m;
}

AttentionMask AttentionMask::keys(std::size_t n_q, std::span<const std::uint8_t> key_valid) {
  AttentionMask m(n_q, key_valid.size(), false);
  for (std::size_t i = 0; i < n_q; ++i)
    for (std::size_t j = 0; j < key_valid.size(); ++j) m.set(i, j, key_valid[j] != 0);
  return m;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask,
                            AttentionCache* cache) {
  if (q.cols() != k.cols() || k.rows() != v.rows() || mask.n_q() != q.rows() || mask.n_k() != k.rows()) {
    throw Error(fmt::format("scaled_dot_attention: shape mismatch Q {}x{}, K {}x{}, V {}x{}, mask {}x{}", q.rows(),
                            q.cols(), k.rows(), k.cols(), v.rows(), v.cols(), mask.n_q(), mask.n_k()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix weights = matmul_nt(q, k);
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    auto row = weights.row(i);
    double max_score = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!mask.allowed(i, j)) continue;
      row[j] *= scale;
      max_score = std::max(max_score, row[j]);
      any = true;
    }
    if (!any) throw Error("fully masked query row");
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (mask.allowed(i, j)) {
        row[j] = std::exp(row[j] - max_score);
        sum += row[j];
      } else {
        row[j] = 0.0;
      }
    }
    for (auto& w : row) w /= sum;
  }
  Matrix out = matmul(weights, v);
  if (cache != nullptr) cache->weights = std::move(weights);
  return out;
}

AttentionGrads scaled_dot_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                             const AttentionCache& cache, const Matrix& dout) {
  const Matrix& p = cache.weights;
  AttentionGrads g;
  g.dv = matmul_tn(p, dout);
  Matrix dp = matmul_nt(dout, v);
  // Softmax Jacobian: ds_ij = p_ij (dp_ij - sum_k p_ik dp_ik).
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (std::size_t i = 0; i < dp.rows(); ++i) {
    auto drow = dp.row(i);
    const auto prow = p.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < drow.size(); ++j) dot += prow[j] * drow[j];
    for (std::size_t j = 0; j < drow.size(); ++j) drow[j] = prow[j] * (drow[j] - dot) * scale;
  }
  g.dq = matmul(dp, k);
  g.dk = matmul_tn(dp, q);
  return g;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps, LayerNormCache* cache) {
  const std::size_t d = x.cols();
  if (gain.rows() != 1 || bias.rows() != 1 || gain.cols() != d || bias.cols() != d) {
    throw Error(fmt::format("layer_norm: gain/bias must be 1x{}", d));
  }
  if (!(eps > 0.0)) throw Error("layer_norm: eps must be positive");
  Matrix normalized(x.rows(), d);
  std::vector<double> inv_std(x.rows());
  Matrix out(x.rows(), d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xr = x.row(i);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double nhat = (xr[j] - mean) * inv;
      normalized(i, j) = nhat;
      out(i, j) = gain(0, j) * nhat + bias(0, j);
    }
  }
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

LayerNormGrads layer_norm_backward(const Matrix& gain, const LayerNormCache& cache, const Matrix& dout) {
  const Matrix& xhat = cache.normalized;
  const std::size_t d = xhat.cols();
  LayerNormGrads g{Matrix(xhat.rows(), d), Matrix(1, d), Matrix(1, d)};
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < xhat.rows(); ++i) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dy = dout(i, j);
      g.dgain(0, j) += dy * xhat(i, j);
      g.dbias(0, j) += dy;
      dxhat[j] = dy * gain(0, j);
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat(i, j);
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      g.dx(i, j) = cache.inv_std[i] * (dxhat[j] - mean_dxhat - xhat(i, j) * mean_dxhat_xhat);
    }
  }
  return g;
}

Matrix position_wise_ffn(const Matrix& x, const Matrix& w1, const Matrix& b1, const Matrix& w2, const Matrix& b2,
                         FfnCache* cache) {
  if (x.cols() != w1.rows() || w1.cols() != w2.rows() || w2.cols() != x.cols() || b1.rows() != 1 ||
      b1.cols() != w1.cols() || b2.rows() != 1 || b2.cols() != w2.cols()) {
    throw Error(fmt::format("position_wise_ffn: shape mismatch x {}x{}, W1 {}x{}, W2 {}x{}", x.rows(), x.cols(),
                            w1.rows(), w1.cols(), w2.rows(), w2.cols()));
  }
  Matrix hidden = matmul(x, w1);
  add_row_vector(hidden, b1);
  for (auto& v : hidden.values()) v = v > 0.0 ? v : 0.0;
  Matrix out = matmul(hidden, w2);
  add_row_vector(out, b2);
  if (cache != nullptr) {
    cache->input = x;
    cache->hidden = std::move(hidden);
  }
  return out;
}

FfnGrads position_wise_ffn_backward(const Matrix& w1, const Matrix& w2, const FfnCache& cache, const Matrix& dout) {
  FfnGrads g;
  g.dw2 = matmul_tn(cache.hidden, dout);
  g.db2 = Matrix(1, dout.cols());
  accumulate_column_sums(g.db2, dout);
  Matrix dhidden = matmul_nt(dout, w2);
  const auto h = cache.hidden.values();
  auto dh = dhidden.values();
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (h[i] <= 0.0) dh[i] = 0.0;
  }
  g.dw1 = matmul_tn(cache.input, dhidden);
  g.db1 = Matrix(1, dhidden.cols());
  accumulate_column_sums(g.db1, dhidden);
  g.dx = matmul_nt(dhidden, w1);
  return g;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error("log_softmax: empty row");
  const double max_v = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max_v);
  const double log_z = max_v + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

}  // namespace qr::kernel
