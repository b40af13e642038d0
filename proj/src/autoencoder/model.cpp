#include "qr/autoencoder/model.hpp"

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::ae {
namespace {

template <typename Params, typename Fn>
void visit(Params& p, Fn&& fn) {
  fn("embedding", p.embedding);
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    auto& e = p.encoder[l];
    const std::string pre = fmt::format("encoder.{}.", l);
    fn(pre + "wq", e.wq);
    fn(pre + "wk", e.wk);
    fn(pre + "wv", e.wv);
    fn(pre + "ln1_gain", e.ln1_gain);
    fn(pre + "ln1_bias", e.ln1_bias);
    fn(pre + "w1", e.w1);
    fn(pre + "b1", e.b1);
    fn(pre + "w2", e.w2);
    fn(pre + "b2", e.b2);
    fn(pre + "ln2_gain", e.ln2_gain);
    fn(pre + "ln2_bias", e.ln2_bias);
  }
  for (std::size_t l = 0; l < p.decoder.size(); ++l) {
    auto& d = p.decoder[l];
    const std::string pre = fmt::format("decoder.{}.", l);
    fn(pre + "self_wq", d.self_wq);
    fn(pre + "self_wk", d.self_wk);
    fn(pre + "self_wv", d.self_wv);
    fn(pre + "ln1_gain", d.ln1_gain);
    fn(pre + "ln1_bias", d.ln1_bias);
    fn(pre + "cross_wq", d.cross_wq);
    fn(pre + "cross_wk", d.cross_wk);
    fn(pre + "cross_wv", d.cross_wv);
    fn(pre + "ln2_gain", d.ln2_gain);
    fn(pre + "ln2_bias", d.ln2_bias);
    fn(pre + "w1", d.w1);
    fn(pre + "b1", d.b1);
    fn(pre + "w2", d.w2);
    fn(pre + "b2", d.b2);
    fn(pre + "ln3_gain", d.ln3_gain);
    fn(pre + "ln3_bias", d.ln3_bias);
  }
  fn("out_w", p.out_w);
  fn("out_b", p.out_b);
}

}  // namespace

void validate(const ModelConfig& c) {
  if (c.vocab_size < 3) throw Error(fmt::format("model: vocab_size {} too small", c.vocab_size));
  if (c.d_model == 0 || c.d_k == 0 || c.d_ff == 0 || c.layers == 0) throw Error("model: zero dimension");
}

Parameters Parameters::zeros(const ModelConfig& c) {
  validate(c);
  const std::size_t d = c.d_model;
  Parameters p;
  p.embedding = Matrix(c.vocab_size, d);
  for (std::size_t l = 0; l < c.layers; ++l) {
    EncoderLayer e{Matrix(d, c.d_k), Matrix(d, c.d_k), Matrix(d, d),       Matrix(1, d), Matrix(1, d),    Matrix(d, c.d_ff),
                   Matrix(1, c.d_ff), Matrix(c.d_ff, d), Matrix(1, d), Matrix(1, d),    Matrix(1, d)};
    p.encoder.push_back(std::move(e));
    DecoderLayer dl{Matrix(d, c.d_k),    Matrix(d, c.d_k), Matrix(d, d), Matrix(1, d),    Matrix(1, d),
                    Matrix(d, c.d_k),    Matrix(d, c.d_k), Matrix(d, d), Matrix(1, d),    Matrix(1, d),
                    Matrix(d, c.d_ff),   Matrix(1, c.d_ff), Matrix(c.d_ff, d), Matrix(1, d), Matrix(1, d),
                    Matrix(1, d)};
    p.decoder.push_back(std::move(dl));
  }
  p.out_w = Matrix(d, c.vocab_size);
  p.out_b = Matrix(1, c.vocab_size);
  return p;
}

std::vector<Matrix*> Parameters::tensors() {
  std::vector<Matrix*> out;
  visit(*this, [&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> Parameters::tensors() const {
  std::vector<const Matrix*> out;
  visit(*this, [&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<std::string> Parameters::names() const {
  std::vector<std::string> out;
  visit(*this, [&](const std::string& name, const Matrix&) { out.push_back(name); });
  return out;
}

void Parameters::set_zero() {
  for (Matrix* m : tensors()) m->fill(0.0);
}

AutoencoderModel init_model(const ModelConfig& config, kernel::Rng& rng) {
  using kernel::orthogonal_init;
  using kernel::uniform_init;
  constexpr double b = kernel::kUniformInitBound;
  AutoencoderModel model{config, Parameters::zeros(config)};
  Parameters& p = model.params;
  const std::size_t d = config.d_model;
  const std::size_t f = config.d_ff;

  p.embedding = uniform_init(config.vocab_size, d, -b, b, rng);
  for (auto& v : p.embedding.row(0)) v = 0.0;
  auto ones = [](Matrix& m) { m.fill(1.0); };
  for (auto& e : p.encoder) {
    e.wq = orthogonal_init(d, config.d_k, rng);
    e.wk = orthogonal_init(d, config.d_k, rng);
    e.wv = orthogonal_init(d, d, rng);
    e.w1 = uniform_init(d, f, -b, b, rng);
    e.b1 = uniform_init(1, f, -b, b, rng);
    e.w2 = uniform_init(f, d, -b, b, rng);
    e.b2 = uniform_init(1, d, -b, b, rng);
    ones(e.ln1_gain);
    ones(e.ln2_gain);
  }
  for (auto& dl : p.decoder) {
    dl.self_wq = orthogonal_init(d, config.d_k, rng);
    dl.self_wk = orthogonal_init(d, config.d_k, rng);
    dl.self_wv = orthogonal_init(d, d, rng);
    dl.cross_wq = orthogonal_init(d, config.d_k, rng);
    dl.cross_wk = orthogonal_init(d, config.d_k, rng);
    dl.cross_wv = orthogonal_init(d, d, rng);
    dl.w1 = uniform_init(d, f, -b, b, rng);
    dl.b1 = uniform_init(1, f, -b, b, rng);
    dl.w2 = uniform_init(f, d, -b, b, rng);
    dl.b2 = uniform_init(1, d, -b, b, rng);
    ones(dl.ln1_gain);
    ones(dl.ln2_gain);
    ones(dl.ln3_gain);
  }
  p.out_w = uniform_init(d, config.vocab_size, -b, b, rng);
  return model;
}

}  // namespace qr::ae
