#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qr/kernel/init.hpp"
#include "qr/kernel/matrix.hpp"

namespace qr::ae {

using kernel::Matrix;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 200;  // embedding width == hidden width == value width
  std::size_t d_k = 200;      // query/key width
  std::size_t d_ff = 800;
  std::size_t layers = 2;
  bool positional_encoding = true;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Self-attention, then position-wise feed-forward; each followed by residual + LayerNorm.
struct EncoderLayer {
  Matrix wq, wk, wv;
  Matrix ln1_gain, ln1_bias;
  Matrix w1, b1, w2, b2;
  Matrix ln2_gain, ln2_bias;
};

/// Causal self-attention, encoder-decoder attention, feed-forward; each followed by residual + LayerNorm.
struct DecoderLayer {
  Matrix self_wq, self_wk, self_wv;
  Matrix ln1_gain, ln1_bias;
  Matrix cross_wq, cross_wk, cross_wv;
  Matrix ln2_gain, ln2_bias;
  Matrix w1, b1, w2, b2;
  Matrix ln3_gain, ln3_bias;
};

struct Parameters {
  Matrix embedding;  // vocab x d_model
  std::vector<EncoderLayer> encoder;
  std::vector<DecoderLayer> decoder;
  Matrix out_w;  // d_model x vocab
  Matrix out_b;  // 1 x vocab

  /// Every tensor with the right shape, filled with zeros.
  static Parameters zeros(const ModelConfig& config);

  /// Tensors in a fixed order (checkpoints, Adam, gradient checks rely on it).
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  /// Names parallel to tensors(), e.g. "encoder.0.wq".
  std::vector<std::string> names() const;

  void set_zero();
};

struct AutoencoderModel {
  ModelConfig config;
  Parameters params;
};

/// Validates dimensions; throws on zero sizes or vocab < 3.
void validate(const ModelConfig& config);

/// Attention projections orthogonal; feed-forward weights and biases, the
/// embedding table and the output projection uniform in [-0.1, 0.1);
/// LayerNorm gains 1, biases 0; output bias 0; PAD embedding row zero.
AutoencoderModel init_model(const ModelConfig& config, kernel::Rng& rng);

}  // namespace qr::ae
