#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qr/autoencoder/model.hpp"
#include "qr/kernel/ops.hpp"
#include "qr/text/vocabulary.hpp"

namespace qr::ae {

using text::TokenId;

/// Sinusoidal encoding: sin(pos / 10000^(2i/d)) on even columns, cos on odd.
Matrix positional_encoding(std::size_t length, std::size_t d_model);

/// 1 for real tokens, 0 for PAD. Throws if the sequence is empty, all PAD,
/// or has a real token after a PAD.
std::vector<std::uint8_t> real_positions(std::span<const TokenId> ids);

/// Row i = E[id_i] (+ positional encoding of i). Throws on an id outside the vocabulary.
Matrix embed(const AutoencoderModel& model, std::span<const TokenId> ids);

/// Stacked encoder layers. PAD positions (key_valid == 0) are never attended.
Matrix encode(const AutoencoderModel& model, const Matrix& x, std::span<const std::uint8_t> key_valid);

/// embed + encode: the hidden representation h_e used for matching.
Matrix encode_sequence(const AutoencoderModel& model, std::span<const TokenId> ids);

/// Decoder logits (n x vocab) under teacher forcing. The decoder input is the
/// right-shifted embedding sequence with a zero vector at position 0.
/// h_e must come from encode() on the same sequence.
Matrix decode_teacher_forced(const AutoencoderModel& model, const Matrix& h_e, std::span<const TokenId> ids);

/// -sum over real positions of log softmax(logits_i)[target_i].
double reconstruction_loss(const Matrix& logits, std::span<const TokenId> targets,
                           std::span<const std::uint8_t> real);

/// Forward + reverse pass for one sequence. Adds scale * dLoss/dtheta to
/// grads and returns the unscaled loss.
double loss_and_gradient(const AutoencoderModel& model, std::span<const TokenId> ids, Parameters& grads,
                         double scale = 1.0);

/// Loss only (no caches).
double sequence_loss(const AutoencoderModel& model, std::span<const TokenId> ids);

/// Autoregressive argmax decoding of as many tokens as the input has real positions.
std::vector<TokenId> greedy_reconstruct(const AutoencoderModel& model, std::span<const TokenId> ids);

}  // namespace qr::ae
