#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qr/autoencoder/model.hpp"
#include "qr/kernel/init.hpp"
#include "qr/text/vocabulary.hpp"

namespace qr::testing {

using kernel::Matrix;
using Mat = std::vector<std::vector<double>>;

// d_m=8, d_ff=32, vocab 20, L=2: the configuration the gradient gate uses.
inline ae::ModelConfig tiny_config(bool positional = true) {
  return ae::ModelConfig{.vocab_size = 20, .d_model = 8, .d_k = 8, .d_ff = 32, .layers = 2,
                         .positional_encoding = positional};
}

inline ae::AutoencoderModel tiny_model(std::uint64_t seed = 7, bool positional = true) {
  kernel::Rng rng(seed);
  return ae::init_model(tiny_config(positional), rng);
}

// Non-PAD ids in [2, vocab).
inline std::vector<text::TokenId> random_ids(kernel::Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<text::TokenId> ids(n);
  for (auto& id : ids) id = static_cast<text::TokenId>(2 + rng.below(vocab - 2));
  return ids;
}

inline Matrix random_matrix(kernel::Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("qr_test_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Scalar-loop reference implementation of the autoencoder forward pass. It
// shares only the parameter storage with the library.
namespace oracle {

inline Mat rows_of(const Matrix& m) {
  Mat out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Mat mul(const Mat& a, const Matrix& w) {
  Mat out(a.size(), std::vector<double>(w.cols(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < w.rows(); ++p) s += a[i][p] * w(p, j);
      out[i][j] = s;
    }
  return out;
}

inline Mat add(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

inline Mat attend(const Mat& q, const Mat& k, const Mat& v, const std::function<bool(std::size_t, std::size_t)>& ok) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q[0].size()));
  Mat out(q.size(), std::vector<double>(v[0].size(), 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<double> s(k.size(), 0.0);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (!ok(i, j)) continue;
      for (std::size_t p = 0; p < q[i].size(); ++p) s[j] += q[i][p] * k[j][p];
      s[j] *= scale;
      mx = std::max(mx, s[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) z += ok(i, j) ? std::exp(s[j] - mx) : 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (!ok(i, j)) continue;
      const double w = std::exp(s[j] - mx) / z;
      for (std::size_t c = 0; c < v[j].size(); ++c) out[i][c] += w * v[j][c];
    }
  }
  return out;
}

inline Mat norm(const Mat& x, const Matrix& gain, const Matrix& bias) {
  Mat out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mean = 0.0;
    for (double v : x[i]) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= n;
    for (std::size_t j = 0; j < x[i].size(); ++j)
      out[i][j] = gain(0, j) * (x[i][j] - mean) / std::sqrt(var + 1e-6) + bias(0, j);
  }
  return out;
}

inline Mat ffn(const Mat& x, const Matrix& w1, const Matrix& b1, const Matrix& w2, const Matrix& b2) {
  Mat h = mul(x, w1);
  for (auto& row : h)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::max(0.0, row[j] + b1(0, j));
  Mat o = mul(h, w2);
  for (auto& row : o)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b2(0, j);
  return o;
}

inline double pe(std::size_t pos, std::size_t j, std::size_t d) {
  const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(j - j % 2) / d);
  return j % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

inline std::size_t real_len(const std::vector<text::TokenId>& ids) {
  std::size_t n = 0;
  while (n < ids.size() && ids[n] != text::Vocabulary::kPad) ++n;
  return n;
}

inline Mat encode(const ae::AutoencoderModel& m, const std::vector<text::TokenId>& ids) {
  const std::size_t d = m.config.d_model;
  const std::size_t real = real_len(ids);
  Mat x(ids.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      x[i][j] = m.params.embedding(ids[i], j) + (m.config.positional_encoding ? pe(i, j, d) : 0.0);
  for (const auto& L : m.params.encoder) {
    const Mat a = attend(mul(x, L.wq), mul(x, L.wk), mul(x, L.wv), [&](std::size_t, std::size_t j) { return j < real; });
    const Mat h = norm(add(a, x), L.ln1_gain, L.ln1_bias);
    x = norm(add(ffn(h, L.w1, L.b1, L.w2, L.b2), h), L.ln2_gain, L.ln2_bias);
  }
  return x;
}

// Logits for position t from a decoder that only ever sees the prefix
// (0, x_0, ..., x_{t-1}). Rows of the prefix still only see earlier rows, as
// they would have when they were produced.
inline std::vector<double> decode_step(const ae::AutoencoderModel& m, const Mat& h_e,
                                       const std::vector<text::TokenId>& ids, std::size_t t) {
  const std::size_t d = m.config.d_model;
  const std::size_t real = real_len(ids);
  Mat y(t + 1, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i <= t; ++i)
    for (std::size_t j = 0; j < d; ++j)
      y[i][j] = (i > 0 ? m.params.embedding(ids[i - 1], j) : 0.0) + (m.config.positional_encoding ? pe(i, j, d) : 0.0);
  for (const auto& L : m.params.decoder) {
    const auto earlier = [](std::size_t i, std::size_t j) { return j <= i; };
    const Mat s = attend(mul(y, L.self_wq), mul(y, L.self_wk), mul(y, L.self_wv), earlier);
    const Mat a = norm(add(s, y), L.ln1_gain, L.ln1_bias);
    const Mat c = attend(mul(a, L.cross_wq), mul(h_e, L.cross_wk), mul(h_e, L.cross_wv),
                         [&](std::size_t, std::size_t j) { return j < real; });
    const Mat b = norm(add(c, a), L.ln2_gain, L.ln2_bias);
    y = norm(add(ffn(b, L.w1, L.b1, L.w2, L.b2), b), L.ln3_gain, L.ln3_bias);
  }
  const Mat logits = mul({y[t]}, m.params.out_w);
  std::vector<double> out = logits[0];
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += m.params.out_b(0, j);
  return out;
}

}  // namespace oracle
}  // namespace qr::testing
