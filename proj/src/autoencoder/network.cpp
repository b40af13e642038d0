#include "qr/autoencoder/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::ae {

using kernel::AttentionCache;
using kernel::AttentionMask;
using kernel::FfnCache;
using kernel::LayerNormCache;
using kernel::accumulate_tn;
using kernel::matmul;
using kernel::matmul_nt;

namespace {

struct EncoderLayerCache {
  Matrix input, q, k, v;
  AttentionCache att;
  LayerNormCache ln1;
  FfnCache ffn;
  LayerNormCache ln2;
};

struct DecoderLayerCache {
  Matrix input, sq, sk, sv;
  AttentionCache self_att;
  LayerNormCache ln1;
  Matrix a_d, cq, ck, cv;
  AttentionCache cross_att;
  LayerNormCache ln2;
  FfnCache ffn;
  LayerNormCache ln3;
};

struct ForwardCache {
  std::vector<EncoderLayerCache> encoder;
  Matrix h_e;
  std::vector<DecoderLayerCache> decoder;
  Matrix h_d;
};

Matrix encoder_layer(const EncoderLayer& L, const Matrix& x, const AttentionMask& mask, EncoderLayerCache* c) {
  Matrix q = matmul(x, L.wq);
  Matrix k = matmul(x, L.wk);
  Matrix v = matmul(x, L.wv);
  Matrix r1 = kernel::scaled_dot_attention(q, k, v, mask, c ? &c->att : nullptr);
  r1 += x;
  Matrix a = kernel::layer_norm(r1, L.ln1_gain, L.ln1_bias, kernel::kLayerNormEpsilon, c ? &c->ln1 : nullptr);
  Matrix r2 = kernel::position_wise_ffn(a, L.w1, L.b1, L.w2, L.b2, c ? &c->ffn : nullptr);
  r2 += a;
  Matrix out = kernel::layer_norm(r2, L.ln2_gain, L.ln2_bias, kernel::kLayerNormEpsilon, c ? &c->ln2 : nullptr);
  if (c != nullptr) {
    c->input = x;
    c->q = std::move(q);
    c->k = std::move(k);
    c->v = std::move(v);
  }
  return out;
}

// Returns d(loss)/d(input).
Matrix encoder_layer_backward(const EncoderLayer& L, const EncoderLayerCache& c, const Matrix& dout,
                              EncoderLayer& g) {
  auto ln2 = kernel::layer_norm_backward(L.ln2_gain, c.ln2, dout);
  g.ln2_gain += ln2.dgain;
  g.ln2_bias += ln2.dbias;
  auto ffn = kernel::position_wise_ffn_backward(L.w1, L.w2, c.ffn, ln2.dx);
  g.w1 += ffn.dw1;
  g.b1 += ffn.db1;
  g.w2 += ffn.dw2;
  g.b2 += ffn.db2;
  Matrix da = std::move(ln2.dx);
  da += ffn.dx;
  auto ln1 = kernel::layer_norm_backward(L.ln1_gain, c.ln1, da);
  g.ln1_gain += ln1.dgain;
  g.ln1_bias += ln1.dbias;
  auto att = kernel::scaled_dot_attention_backward(c.q, c.k, c.v, c.att, ln1.dx);
  accumulate_tn(g.wq, c.input, att.dq);
  accumulate_tn(g.wk, c.input, att.dk);
  accumulate_tn(g.wv, c.input, att.dv);
  Matrix dx = std::move(ln1.dx);
  dx += matmul_nt(att.dq, L.wq);
  dx += matmul_nt(att.dk, L.wk);
  dx += matmul_nt(att.dv, L.wv);
  return dx;
}

Matrix decoder_layer(const DecoderLayer& L, const Matrix& y, const Matrix& h_e, const AttentionMask& self_mask,
                     const AttentionMask& cross_mask, DecoderLayerCache* c) {
  Matrix sq = matmul(y, L.self_wq);
  Matrix sk = matmul(y, L.self_wk);
  Matrix sv = matmul(y, L.self_wv);
  Matrix r1 = kernel::scaled_dot_attention(sq, sk, sv, self_mask, c ? &c->self_att : nullptr);
  r1 += y;
  Matrix a_d = kernel::layer_norm(r1, L.ln1_gain, L.ln1_bias, kernel::kLayerNormEpsilon, c ? &c->ln1 : nullptr);

  Matrix cq = matmul(a_d, L.cross_wq);
  Matrix ck = matmul(h_e, L.cross_wk);
  Matrix cv = matmul(h_e, L.cross_wv);
  Matrix r2 = kernel::scaled_dot_attention(cq, ck, cv, cross_mask, c ? &c->cross_att : nullptr);
  r2 += a_d;
  Matrix a_ed = kernel::layer_norm(r2, L.ln2_gain, L.ln2_bias, kernel::kLayerNormEpsilon, c ? &c->ln2 : nullptr);

  Matrix r3 = kernel::position_wise_ffn(a_ed, L.w1, L.b1, L.w2, L.b2, c ? &c->ffn : nullptr);
  r3 += a_ed;
  Matrix out = kernel::layer_norm(r3, L.ln3_gain, L.ln3_bias, kernel::kLayerNormEpsilon, c ? &c->ln3 : nullptr);
  if (c != nullptr) {
    c->input = y;
    c->sq = std::move(sq);
    c->sk = std::move(sk);
    c->sv = std::move(sv);
    c->a_d = std::move(a_d);
    c->cq = std::move(cq);
    c->ck = std::move(ck);
    c->cv = std::move(cv);
  }
  return out;
}

// Returns d(loss)/d(input); adds the encoder-output gradient into dh_e.
Matrix decoder_layer_backward(const DecoderLayer& L, const DecoderLayerCache& c, const Matrix& h_e,
                              const Matrix& dout, DecoderLayer& g, Matrix& dh_e) {
  auto ln3 = kernel::layer_norm_backward(L.ln3_gain, c.ln3, dout);
  g.ln3_gain += ln3.dgain;
  g.ln3_bias += ln3.dbias;
  auto ffn = kernel::position_wise_ffn_backward(L.w1, L.w2, c.ffn, ln3.dx);
  g.w1 += ffn.dw1;
  g.b1 += ffn.db1;
  g.w2 += ffn.dw2;
  g.b2 += ffn.db2;
  Matrix da_ed = std::move(ln3.dx);
  da_ed += ffn.dx;

  auto ln2 = kernel::layer_norm_backward(L.ln2_gain, c.ln2, da_ed);
  g.ln2_gain += ln2.dgain;
  g.ln2_bias += ln2.dbias;
  auto cross = kernel::scaled_dot_attention_backward(c.cq, c.ck, c.cv, c.cross_att, ln2.dx);
  accumulate_tn(g.cross_wq, c.a_d, cross.dq);
  accumulate_tn(g.cross_wk, h_e, cross.dk);
  accumulate_tn(g.cross_wv, h_e, cross.dv);
  dh_e += matmul_nt(cross.dk, L.cross_wk);
  dh_e += matmul_nt(cross.dv, L.cross_wv);
  Matrix da_d = std::move(ln2.dx);
  da_d += matmul_nt(cross.dq, L.cross_wq);

  auto ln1 = kernel::layer_norm_backward(L.ln1_gain, c.ln1, da_d);
  g.ln1_gain += ln1.dgain;
  g.ln1_bias += ln1.dbias;
  auto self = kernel::scaled_dot_attention_backward(c.sq, c.sk, c.sv, c.self_att, ln1.dx);
  accumulate_tn(g.self_wq, c.input, self.dq);
  accumulate_tn(g.self_wk, c.input, self.dk);
  accumulate_tn(g.self_wv, c.input, self.dv);
  Matrix dy = std::move(ln1.dx);
  dy += matmul_nt(self.dq, L.self_wq);
  dy += matmul_nt(self.dk, L.self_wk);
  dy += matmul_nt(self.dv, L.self_wv);
  return dy;
}

void check_ids(const AutoencoderModel& model, std::span<const TokenId> ids) {
  for (TokenId id : ids) {
    if (id >= model.config.vocab_size) {
      throw Error(fmt::format("token id {} out of range (vocab {})", id, model.config.vocab_size));
    }
  }
}

// Right-shifted embeddings: row 0 is zero, row i is E[id_{i-1}]; plus positions.
Matrix decoder_input(const AutoencoderModel& model, std::span<const TokenId> ids) {
  const std::size_t n = ids.size();
  const std::size_t d = model.config.d_model;
  Matrix y(n, d);
  for (std::size_t i = 1; i < n; ++i) {
    const auto src = model.params.embedding.row(ids[i - 1]);
    std::copy(src.begin(), src.end(), y.row(i).begin());
  }
  if (model.config.positional_encoding) y += positional_encoding(n, d);
  return y;
}

Matrix run_encoder(const AutoencoderModel& model, const Matrix& x, std::span<const std::uint8_t> key_valid,
                   std::vector<EncoderLayerCache>* caches) {
  if (x.cols() != model.config.d_model || key_valid.size() != x.rows()) throw Error("encode: shape mismatch");
  if (std::none_of(key_valid.begin(), key_valid.end(), [](std::uint8_t v) { return v != 0; })) {
    throw Error("encode: all positions are PAD");
  }
  const AttentionMask mask = AttentionMask::keys(x.rows(), key_valid);
  if (caches != nullptr) caches->resize(model.params.encoder.size());
  Matrix h = x;
  for (std::size_t l = 0; l < model.params.encoder.size(); ++l) {
    h = encoder_layer(model.params.encoder[l], h, mask, caches ? &(*caches)[l] : nullptr);
  }
  return h;
}

Matrix run_decoder(const AutoencoderModel& model, const Matrix& h_e, std::span<const std::uint8_t> enc_valid,
                   std::span<const TokenId> ids, std::vector<DecoderLayerCache>* caches, Matrix* h_d_out) {
  const std::size_t n = ids.size();
  const AttentionMask self_mask = AttentionMask::causal(n);
  const AttentionMask cross_mask = AttentionMask::keys(n, enc_valid);
  if (caches != nullptr) caches->resize(model.params.decoder.size());
  Matrix h = decoder_input(model, ids);
  for (std::size_t l = 0; l < model.params.decoder.size(); ++l) {
    h = decoder_layer(model.params.decoder[l], h, h_e, self_mask, cross_mask, caches ? &(*caches)[l] : nullptr);
  }
  Matrix logits = matmul(h, model.params.out_w);
  kernel::add_row_vector(logits, model.params.out_b);
  if (h_d_out != nullptr) *h_d_out = std::move(h);
  return logits;
}

}  // namespace

Matrix positional_encoding(std::size_t length, std::size_t d_model) {
  Matrix pe(length, d_model);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t j = 0; j < d_model; ++j) {
      const double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

std::vector<std::uint8_t> real_positions(std::span<const TokenId> ids) {
  if (ids.empty()) throw Error("empty token sequence");
  std::vector<std::uint8_t> real(ids.size());
  bool seen_pad = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const bool pad = ids[i] == text::Vocabulary::kPad;
    if (!pad && seen_pad) throw Error("PAD may only appear as trailing padding");
    seen_pad = seen_pad || pad;
    real[i] = pad ? 0 : 1;
  }
  if (real[0] == 0) throw Error("sequence is all PAD");
  return real;
}

Matrix embed(const AutoencoderModel& model, std::span<const TokenId> ids) {
  check_ids(model, ids);
  const std::size_t d = model.config.d_model;
  Matrix x(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto src = model.params.embedding.row(ids[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  if (model.config.positional_encoding) x += positional_encoding(ids.size(), d);
  return x;
}

Matrix encode(const AutoencoderModel& model, const Matrix& x, std::span<const std::uint8_t> key_valid) {
  return run_encoder(model, x, key_valid, nullptr);
}

Matrix encode_sequence(const AutoencoderModel& model, std::span<const TokenId> ids) {
  const auto real = real_positions(ids);
  return encode(model, embed(model, ids), real);
}

Matrix decode_teacher_forced(const AutoencoderModel& model, const Matrix& h_e, std::span<const TokenId> ids) {
  if (h_e.rows() != ids.size() || h_e.cols() != model.config.d_model) {
    throw Error(fmt::format("decode: h_e is {}x{} but the sequence has {} tokens", h_e.rows(), h_e.cols(),
                            ids.size()));
  }
  check_ids(model, ids);
  const auto real = real_positions(ids);
  return run_decoder(model, h_e, real, ids, nullptr, nullptr);
}

double reconstruction_loss(const Matrix& logits, std::span<const TokenId> targets,
                           std::span<const std::uint8_t> real) {
  if (logits.rows() != targets.size() || real.size() != targets.size()) {
    throw Error("reconstruction_loss: length mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (real[i] == 0) continue;
    if (targets[i] >= logits.cols()) throw Error("reconstruction_loss: target out of range");
    const auto lp = kernel::log_softmax(logits.row(i));
    loss -= lp[targets[i]];
  }
  return loss;
}

double sequence_loss(const AutoencoderModel& model, std::span<const TokenId> ids) {
  const auto real = real_positions(ids);
  const Matrix h_e = encode(model, embed(model, ids), real);
  const Matrix logits = run_decoder(model, h_e, real, ids, nullptr, nullptr);
  return reconstruction_loss(logits, ids, real);
}

double loss_and_gradient(const AutoencoderModel& model, std::span<const TokenId> ids, Parameters& grads,
                         double scale) {
  const auto real = real_positions(ids);
  const Parameters& p = model.params;
  const std::size_t n = ids.size();
  const std::size_t vocab = model.config.vocab_size;

  ForwardCache cache;
  cache.h_e = run_encoder(model, embed(model, ids), real, &cache.encoder);
  Matrix logits = run_decoder(model, cache.h_e, real, ids, &cache.decoder, &cache.h_d);

  // dL/dlogits = softmax - onehot on real rows.
  double loss = 0.0;
  Matrix dlogits(n, vocab);
  for (std::size_t i = 0; i < n; ++i) {
    if (real[i] == 0) continue;
    const auto lp = kernel::log_softmax(logits.row(i));
    loss -= lp[ids[i]];
    auto drow = dlogits.row(i);
    for (std::size_t j = 0; j < vocab; ++j) drow[j] = std::exp(lp[j]) * scale;
    drow[ids[i]] -= scale;
  }
  if (!std::isfinite(loss)) throw Error("non-finite reconstruction loss");

  accumulate_tn(grads.out_w, cache.h_d, dlogits);
  kernel::accumulate_column_sums(grads.out_b, dlogits);
  Matrix dh = matmul_nt(dlogits, p.out_w);

  Matrix dh_e(cache.h_e.rows(), cache.h_e.cols());
  for (std::size_t l = p.decoder.size(); l-- > 0;) {
    dh = decoder_layer_backward(p.decoder[l], cache.decoder[l], cache.h_e, dh, grads.decoder[l], dh_e);
  }
  // dh is now the gradient of the shifted decoder input.
  for (std::size_t i = 1; i < n; ++i) {
    auto dst = grads.embedding.row(ids[i - 1]);
    const auto src = dh.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }

  Matrix dx = std::move(dh_e);
  for (std::size_t l = p.encoder.size(); l-- > 0;) {
    dx = encoder_layer_backward(p.encoder[l], cache.encoder[l], dx, grads.encoder[l]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = grads.embedding.row(ids[i]);
    const auto src = dx.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  return loss;
}

std::vector<TokenId> greedy_reconstruct(const AutoencoderModel& model, std::span<const TokenId> ids) {
  const auto real = real_positions(ids);
  check_ids(model, ids);
  const Matrix h_e = encode(model, embed(model, ids), real);
  const std::size_t n = static_cast<std::size_t>(std::count(real.begin(), real.end(), std::uint8_t{1}));
  std::vector<TokenId> generated;
  generated.reserve(n);
  std::vector<TokenId> prefix;
  for (std::size_t i = 0; i < n; ++i) {
    // Input for step i is (0, y_0..y_{i-1}); the trailing slot is never read.
    prefix = generated;
    prefix.push_back(text::Vocabulary::kPad);
    const Matrix logits = run_decoder(model, h_e, real, prefix, nullptr, nullptr);
    const auto row = logits.row(i);
    generated.push_back(static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return generated;
}

}  // namespace qr::ae
