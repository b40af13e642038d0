#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qr/autoencoder/checkpoint.hpp"
#include "qr/autoencoder/embeddings.hpp"
#include "qr/autoencoder/network.hpp"
#include "qr/autoencoder/trainer.hpp"
#include "qr/error.hpp"
#include "qr/kernel/adam.hpp"
#include "qr/kernel/gradcheck.hpp"
#include "support.hpp"

using namespace qr;
using namespace qr::ae;
using qr::testing::random_ids;
using qr::testing::TempDir;
using qr::testing::tiny_model;
using text::TokenId;
namespace oracle = qr::testing::oracle;

namespace {

double max_diff(const Matrix& m, const qr::testing::Mat& o) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d = std::max(d, std::abs(m(i, j) - o[i][j]));
  return d;
}

text::TokenSequence as_seq(std::vector<TokenId> ids) {
  text::TokenSequence s;
  s.ids = std::move(ids);
  s.tokens.assign(s.ids.size(), "w");
  return s;
}

}  // namespace

TEST_CASE("embedding lookup and positional encoding") {
  auto m = tiny_model();
  const std::vector<TokenId> one{5};
  const Matrix x = embed(m, one);
  REQUIRE(x.rows() == 1);
  for (std::size_t j = 0; j < 8; ++j) CHECK(x(0, j) == m.params.embedding(5, j) + (j % 2 == 0 ? 0.0 : 1.0));

  const std::vector<TokenId> twice{4, 4};
  auto off = tiny_model(7, false);
  const Matrix a = embed(off, twice);
  CHECK(a.slice_rows(0, 1) == a.slice_rows(1, 1));
  const Matrix b = embed(m, twice);
  CHECK(max_abs_diff(b.slice_rows(0, 1), b.slice_rows(1, 1)) > 0.1);

  const Matrix pe = positional_encoding(3, 8);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t j = 0; j < 8; ++j) CHECK(pe(p, j) == doctest::Approx(oracle::pe(p, j, 8)).epsilon(1e-15));

  CHECK_THROWS_AS(embed(m, std::vector<TokenId>{20}), Error);
}

TEST_CASE("init_model layout") {
  auto m = tiny_model();
  for (std::size_t j = 0; j < 8; ++j) CHECK(m.params.embedding(0, j) == 0.0);
  const auto& L = m.params.encoder[0];
  CHECK(kernel::max_abs_diff(kernel::matmul_tn(L.wq, L.wq), Matrix::identity(8)) < 1e-6);
  CHECK(L.ln1_gain == Matrix(1, 8, 1.0));
  CHECK(L.ln1_bias == Matrix(1, 8, 0.0));
  for (double v : L.w1.values()) CHECK_UNARY(std::abs(v) <= 0.1);
  CHECK(m.params.tensors().size() == m.params.names().size());
  CHECK(m.params.names().front() == "embedding");
  CHECK_THROWS_AS(validate(ModelConfig{.vocab_size = 2}), Error);
}

TEST_CASE("encoder output depends on the input order only through the permutation") {
  auto m = tiny_model(3, false);
  kernel::Rng rng(4);
  const Matrix x = qr::testing::random_matrix(rng, 4, 8);
  const std::vector<std::uint8_t> valid(4, 1);
  const Matrix h = encode(m, x, valid);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  Matrix xp(4, 8);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 8; ++j) xp(i, j) = x(perm[i], j);
  const Matrix hp = encode(m, xp, valid);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(hp(i, j) - h(perm[i], j)) < 1e-9);
}

TEST_CASE("encoder matches the scalar oracle on a hand-set model") {
  ModelConfig c{.vocab_size = 4, .d_model = 2, .d_k = 2, .d_ff = 2, .layers = 1, .positional_encoding = true};
  AutoencoderModel m{c, Parameters::zeros(c)};
  m.params.embedding = Matrix{{0, 0}, {0.2, -0.1}, {1.0, 0.5}, {-0.3, 0.8}};
  auto& L = m.params.encoder[0];
  L.wq = L.wk = L.wv = Matrix::identity(2);
  L.w1 = L.w2 = Matrix::identity(2);
  L.ln1_gain = L.ln2_gain = Matrix(1, 2, 1.0);
  const std::vector<TokenId> ids{2, 3};
  CHECK(max_diff(encode_sequence(m, ids), oracle::encode(m, ids)) < 1e-12);
}

TEST_CASE("encoder and decoder match the scalar oracle on random models") {
  kernel::Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = tiny_model(100 + trial, trial % 2 == 0);
    auto ids = random_ids(rng, 1 + rng.below(7), 20);
    if (trial == 3) ids.insert(ids.end(), 3, text::Vocabulary::kPad);
    const Matrix h_e = encode_sequence(m, ids);
    const auto h_o = oracle::encode(m, ids);
    CHECK(max_diff(h_e, h_o) < 1e-12);

    const Matrix logits = decode_teacher_forced(m, h_e, ids);
    REQUIRE(logits.rows() == ids.size());
    REQUIRE(logits.cols() == 20);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const auto step = oracle::decode_step(m, h_o, ids, t);
      for (std::size_t v = 0; v < 20; ++v) CHECK(std::abs(logits(t, v) - step[v]) < 1e-9);
    }
  }
}

TEST_CASE("decoder is causal") {
  kernel::Rng rng(31);
  auto m = tiny_model();
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = random_ids(rng, 2 + rng.below(8), 20);
    const Matrix h_e = encode_sequence(m, ids);
    const Matrix base = decode_teacher_forced(m, h_e, ids);
    const std::size_t j = rng.below(ids.size());
    auto changed = ids;
    changed[j] = static_cast<TokenId>(2 + (changed[j] - 2 + 1 + rng.below(17)) % 18);
    const Matrix pert = decode_teacher_forced(m, h_e, changed);
    for (std::size_t i = 0; i <= j; ++i)
      for (std::size_t v = 0; v < 20; ++v) CHECK(base(i, v) == pert(i, v));
  }
  CHECK_THROWS_AS(decode_teacher_forced(m, Matrix(3, 8), std::vector<TokenId>{2, 3}), Error);
}

TEST_CASE("trailing PAD leaves real encoder positions unchanged") {
  kernel::Rng rng(41);
  auto m = tiny_model();
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = random_ids(rng, 1 + rng.below(8), 20);
    auto padded = ids;
    padded.insert(padded.end(), 1 + rng.below(5), text::Vocabulary::kPad);
    const Matrix a = encode_sequence(m, ids);
    const Matrix b = encode_sequence(m, padded);
    CHECK(kernel::max_abs_diff(a, b.slice_rows(0, ids.size())) <= 1e-9);
    CHECK(sequence_loss(m, ids) == doctest::Approx(sequence_loss(m, padded)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(encode_sequence(m, std::vector<TokenId>{0, 0}), Error);
  CHECK_THROWS_AS(encode_sequence(m, std::vector<TokenId>{2, 0, 3}), Error);
  CHECK_THROWS_AS(encode_sequence(m, std::vector<TokenId>{}), Error);
}

TEST_CASE("reconstruction loss closed forms") {
  const std::vector<TokenId> targets{2, 5, 7, 3, 9};
  const std::vector<std::uint8_t> real(5, 1);
  CHECK(reconstruction_loss(Matrix(5, 20), targets, real) == doctest::Approx(5 * std::log(20.0)).epsilon(1e-14));
  CHECK(5 * std::log(20.0) == doctest::Approx(14.9787).epsilon(1e-5));

  Matrix sharp(5, 20);
  for (std::size_t i = 0; i < 5; ++i) sharp(i, targets[i]) = 50.0;
  CHECK(reconstruction_loss(sharp, targets, real) < 1e-9);

  const std::vector<TokenId> padded{2, 5, 7, 3, 9, 0, 0};
  const std::vector<std::uint8_t> preal{1, 1, 1, 1, 1, 0, 0};
  Matrix big(7, 20);
  for (std::size_t j = 0; j < 20; ++j) big(6, j) = static_cast<double>(j);
  CHECK(reconstruction_loss(big, padded, preal) == reconstruction_loss(Matrix(5, 20), targets, real));
}

TEST_CASE("output distributions are normalized") {
  auto m = tiny_model();
  kernel::Rng rng(51);
  const auto ids = random_ids(rng, 6, 20);
  const Matrix logits = decode_teacher_forced(m, encode_sequence(m, ids), ids);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto lp = kernel::log_softmax(logits.row(i));
    double s = 0.0;
    for (double v : lp) s += std::exp(v);
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("full-model gradient passes finite differences") {
  kernel::Rng rng(61);
  for (bool padded : {false, true}) {
    auto m = tiny_model(62);
    auto ids = random_ids(rng, 5, 20);
    if (padded) ids.insert(ids.end(), 2, text::Vocabulary::kPad);
    Parameters grads = Parameters::zeros(m.config);
    loss_and_gradient(m, ids, grads);
    const auto r = kernel::finite_difference_check([&] { return sequence_loss(m, ids); }, m.params.tensors(),
                                                   std::as_const(grads).tensors());
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.entries_checked > 3000);
  }
}

TEST_CASE("loss_and_gradient scales and accumulates") {
  auto m = tiny_model();
  const std::vector<TokenId> ids{3, 4, 5};
  Parameters a = Parameters::zeros(m.config), b = Parameters::zeros(m.config);
  const double la = loss_and_gradient(m, ids, a, 1.0);
  const double lb = loss_and_gradient(m, ids, b, 0.5);
  loss_and_gradient(m, ids, b, 0.5);
  CHECK(la == lb);
  CHECK(la == sequence_loss(m, ids));
  const auto ta = std::as_const(a).tensors();
  const auto tb = std::as_const(b).tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) CHECK(kernel::max_abs_diff(*ta[k], *tb[k]) < 1e-12);
}

TEST_CASE("first Adam steps reduce the loss on a fixed batch") {
  auto m = tiny_model(71);
  kernel::Rng rng(72);
  std::vector<std::vector<TokenId>> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(random_ids(rng, 5, 20));
  kernel::AdamState st(kernel::AdamConfig{.learning_rate = 0.01}, std::as_const(m.params).tensors());
  Parameters g = Parameters::zeros(m.config);
  double prev = INFINITY;
  for (int step = 0; step < 5; ++step) {
    g.set_zero();
    double loss = 0.0;
    for (const auto& ids : batch) loss += loss_and_gradient(m, ids, g, 1.0 / 20);
    CHECK(loss < prev);
    prev = loss;
    kernel::adam_step(m.params.tensors(), std::as_const(g).tensors(), st);
  }
}

TEST_CASE("early stopping contract") {
  EarlyStopping s(3);
  CHECK(s.update(5.0));
  CHECK_FALSE(s.update(5.5));
  CHECK_FALSE(s.update(6.0));
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.update(7.0));
  CHECK(s.should_stop());
  CHECK(s.best_epoch() == 1);
  CHECK(s.best_loss() == 5.0);

  EarlyStopping t(2);
  t.update(3.0);
  t.update(3.0);
  CHECK_FALSE(t.should_stop());
  t.update(2.0);
  t.update(2.5);
  CHECK_FALSE(t.should_stop());
  CHECK(t.best_epoch() == 3);
}

TEST_CASE("training is deterministic and returns the best dev model") {
  kernel::Rng rng(81);
  std::vector<text::TokenSequence> corpus, dev;
  for (int i = 0; i < 12; ++i) corpus.push_back(as_seq(random_ids(rng, 3 + rng.below(4), 20)));
  for (int i = 0; i < 4; ++i) dev.push_back(as_seq(random_ids(rng, 4, 20)));
  TrainConfig cfg{.batch_size = 5, .learning_rate = 0.003, .patience = 2, .max_epochs = 6, .seed = 9};
  std::vector<std::string> lines;
  const auto a = train(tiny_model(), corpus, dev, cfg, [&](const EpochRecord& r) { lines.push_back(format_epoch(r)); });
  const auto b = train(tiny_model(), corpus, dev, cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(format_epoch(a.log[i]) == format_epoch(b.log[i]));
    CHECK(lines[i] == format_epoch(a.log[i]));
  }
  CHECK(a.model.params.tensors().size() == b.model.params.tensors().size());
  const auto ta = a.model.params.tensors();
  const auto tb = b.model.params.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) CHECK(*ta[k] == *tb[k]);

  double best = INFINITY;
  for (const auto& r : a.log) best = std::min(best, r.dev_loss);
  CHECK(a.log[a.best_epoch - 1].dev_loss == best);
  CHECK(mean_token_loss(a.model, dev) == doctest::Approx(best).epsilon(1e-12));

  CHECK(format_epoch({3, 1.5, 2.25}) == "3\t1.500000000\t2.250000000");
  CHECK_THROWS_AS(train(tiny_model(), {}, dev, cfg), Error);
  CHECK_THROWS_AS(train(tiny_model(), corpus, dev, TrainConfig{.batch_size = 0}), Error);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("ckpt");
  auto m = tiny_model(91);
  save_checkpoint(m, 0xabcdefULL, dir / "a.ckpt");
  const auto header = read_checkpoint_header(dir / "a.ckpt");
  CHECK(header.version == kCheckpointVersion);
  CHECK(header.vocab_hash == 0xabcdefULL);
  CHECK(header.config == m.config);

  const auto loaded = load_checkpoint(dir / "a.ckpt", 0xabcdefULL);
  save_checkpoint(loaded, 0xabcdefULL, dir / "b.ckpt");
  CHECK(qr::testing::slurp(dir / "a.ckpt") == qr::testing::slurp(dir / "b.ckpt"));
  const std::vector<TokenId> ids{2, 9, 4, 11};
  CHECK(encode_sequence(m, ids) == encode_sequence(loaded, ids));

  CHECK_THROWS_AS(load_checkpoint(dir / "a.ckpt", 0x1234ULL), Error);

  const std::string bytes = qr::testing::slurp(dir / "a.ckpt");
  qr::testing::write_text(dir / "trunc.ckpt", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "trunc.ckpt"), Error);
  std::string wrong = bytes;
  wrong[0] = 'X';
  qr::testing::write_text(dir / "magic.ckpt", wrong);
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt"), Error);
  std::string version = bytes;
  version[8] = 9;
  qr::testing::write_text(dir / "version.ckpt", version);
  CHECK_THROWS_AS(load_checkpoint(dir / "version.ckpt"), Error);
}

TEST_CASE("pretrained embeddings loader") {
  TempDir dir("emb");
  const auto vocab = text::Vocabulary::from_entries({{"visa", 3}, {"renew", 2}, {"job", 1}});
  qr::testing::write_text(dir / "full.txt", "3 2\nvisa 0.5 -0.25\nrenew 1 2\njob -1e-3 4\nextra 9 9\n");
  kernel::Rng rng(1);
  const auto full = load_pretrained_embeddings(dir / "full.txt", vocab, 2, rng);
  CHECK(full.covered == 3);
  CHECK(full.file_words == 4);
  CHECK(full.table.rows() == 5);
  CHECK(full.table(0, 0) == 0.0);
  CHECK(full.table(0, 1) == 0.0);
  CHECK(full.table(2, 0) == 0.5);
  CHECK(full.table(2, 1) == -0.25);
  CHECK(full.table(4, 0) == -1e-3);
  CHECK(std::abs(full.table(1, 0)) < 0.1);

  qr::testing::write_text(dir / "empty.txt", "");
  const auto none = load_pretrained_embeddings(dir / "empty.txt", vocab, 2, rng);
  CHECK(none.covered == 0);
  for (std::size_t i = 1; i < 5; ++i) CHECK(std::abs(none.table(i, 0)) < 0.1);

  qr::testing::write_text(dir / "bad.txt", "visa 1 2 3\n");
  CHECK_THROWS_AS(load_pretrained_embeddings(dir / "bad.txt", vocab, 2, rng), Error);
  qr::testing::write_text(dir / "nan.txt", "visa 1 x\n");
  CHECK_THROWS_AS(load_pretrained_embeddings(dir / "nan.txt", vocab, 2, rng), Error);
}

TEST_CASE("greedy reconstruction has the input length") {
  auto m = tiny_model();
  const std::vector<TokenId> ids{2, 3, 4, 0, 0};
  const auto out = greedy_reconstruct(m, ids);
  CHECK(out.size() == 3);
  for (auto id : out) CHECK(id < 20);
}
