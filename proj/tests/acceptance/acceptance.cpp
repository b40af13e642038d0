// Acceptance gates. One line per criterion:
//   [PASS|FAIL|SKIP] <n> <name>: <measured> (<tolerance>)
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cli.hpp"
#include "qr/autoencoder/network.hpp"
#include "qr/autoencoder/trainer.hpp"
#include "qr/eval/metrics.hpp"
#include "qr/kernel/gradcheck.hpp"
#include "qr/ramn/matcher.hpp"
#include "qr/text/pipeline.hpp"
#include "support.hpp"

using namespace qr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using kernel::Matrix;
using text::TokenId;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. Full-model gradient against central differences.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  auto model = qr::testing::tiny_model(1001);
  kernel::Rng rng(1002);
  const auto ids = qr::testing::random_ids(rng, 5, 20);
  ae::Parameters grads = ae::Parameters::zeros(model.config);
  ae::loss_and_gradient(model, ids, grads);
  const auto r = kernel::finite_difference_check([&] { return ae::sequence_loss(model, ids); },
                                                 model.params.tensors(), std::as_const(grads).tensors());
  const double secs = seconds_since(t0);
  return verdict(r.max_relative_error < 1e-4 && secs < 60.0,
                 fmt::format("max rel err {:.3e} over {} entries, {:.1f}s (< 1e-4, < 60s)", r.max_relative_error,
                             r.entries_checked, secs));
}

// 2. Suffix perturbation leaves earlier decoder logits bit-identical; trailing PAD
// leaves real encoder rows unchanged.
Outcome causality_and_masking() {
  kernel::Rng rng(2001);
  const auto model = qr::testing::tiny_model(2002);
  std::size_t causal_violations = 0;
  double pad_diff = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ids = qr::testing::random_ids(rng, 2 + rng.below(9), 20);
    const Matrix h_e = ae::encode_sequence(model, ids);
    const Matrix base = ae::decode_teacher_forced(model, h_e, ids);
    const std::size_t j = rng.below(ids.size());
    auto changed = ids;
    for (std::size_t k = j; k < changed.size(); ++k)
      changed[k] = static_cast<TokenId>(2 + (changed[k] - 2 + 1 + rng.below(17)) % 18);
    const Matrix pert = ae::decode_teacher_forced(model, h_e, changed);
    for (std::size_t i = 0; i <= j; ++i)
      for (std::size_t v = 0; v < base.cols(); ++v) causal_violations += base(i, v) != pert(i, v) ? 1 : 0;

    auto padded = ids;
    padded.insert(padded.end(), 1 + rng.below(6), text::Vocabulary::kPad);
    const Matrix a = ae::encode_sequence(model, padded);
    pad_diff = std::max(pad_diff, kernel::max_abs_diff(h_e, a.slice_rows(0, ids.size())));
  }
  return verdict(causal_violations == 0 && pad_diff <= 1e-9,
                 fmt::format("{} changed prefix logits, PAD max diff {:.3e} (exact, <= 1e-9)", causal_violations,
                             pad_diff));
}

// 3. Overfit the toy corpus; dev = train.
Outcome overfit() {
  const auto t0 = Clock::now();
  const auto corpus = text::read_corpus(fs::path(QR_TEST_DATA) / "toy_corpus.jsonl");
  const auto vocab = text::build_vocabulary(corpus);
  std::vector<text::TokenSequence> seqs;
  for (const auto& q : corpus) seqs.push_back(text::preprocess_question(q.subject, q.body, vocab));

  const ae::ModelConfig config{.vocab_size = vocab.size(), .d_model = 32, .d_k = 32, .d_ff = 128, .layers = 2,
                               .positional_encoding = true};
  kernel::Rng rng(3001);
  const ae::TrainConfig tc{.batch_size = 2, .learning_rate = 0.003, .patience = 3, .max_epochs = 200, .seed = 3002};
  const auto result = ae::train(ae::init_model(config, rng), seqs, seqs, tc);

  std::size_t hits = 0, total = 0;
  for (const auto& s : seqs) {
    const auto out = ae::greedy_reconstruct(result.model, s.ids);
    for (std::size_t i = 0; i < s.ids.size(); ++i) hits += out[i] == s.ids[i] ? 1 : 0;
    total += s.ids.size();
  }
  const double accuracy = static_cast<double>(hits) / static_cast<double>(total);

  // Running best never rises, the returned model is the best epoch, and a stop
  // happens exactly `patience` epochs after it.
  bool monotone = true;
  double best = INFINITY, prev_best = INFINITY;
  std::size_t best_epoch = 0;
  for (const auto& r : result.log) {
    if (r.dev_loss < best) {
      best = r.dev_loss;
      best_epoch = r.epoch;
    }
    monotone = monotone && best <= prev_best;
    prev_best = best;
  }
  const bool contract = best_epoch == result.best_epoch &&
                        std::abs(ae::mean_token_loss(result.model, seqs) - best) <= 1e-12 * std::max(1.0, best) &&
                        (!result.early_stopped || result.log.size() == best_epoch + tc.patience);
  const double secs = seconds_since(t0);
  return verdict(accuracy >= 0.95 && result.log.size() <= 200 && monotone && contract && secs < 300.0,
                 fmt::format("token acc {:.2f}% after {} epochs (best {}), best-dev monotone {}, contract {}, "
                             "{:.1f}s (>= 95%, <= 200 epochs, < 300s)",
                             100.0 * accuracy, result.log.size(), result.best_epoch, monotone ? "yes" : "no",
                             contract ? "yes" : "no", secs));
}

// 4. Worked example, compared exactly.
Outcome worked_example() {
  text::TermStats stats(0);
  const std::vector<std::pair<std::string, std::uint64_t>> counts = {
      {"we", 5401}, {"propose", 75}, {"an", 4221}, {"unsupervised", 8}, {"model", 295}};
  for (const auto& [w, n] : counts) stats.add(w, n);
  const auto vocab = text::Vocabulary::from_entries({});
  const auto query = text::to_sequence({"we", "propose", "an", "unsupervised", "model"}, vocab);
  const auto cand = text::to_sequence({"we", "propose", "a", "new", "model"}, vocab);
  const auto f = text::word_importance(query, stats);
  const auto d = ramn::reduced_vector(query, cand, f);
  const bool ok = f == std::vector<double>{0.5401, 0.0075, 0.4221, 0.0008, 0.0295} &&
                  d == std::vector<double>{1, 1, 0.4221, 0.0008, 1};
  return verdict(ok, fmt::format("f = ({}), d = ({}) (exact)", fmt::join(f, ", "), fmt::join(d, ", ")));
}

// 5. Matching algebra on random instances.
Outcome matching_algebra() {
  kernel::Rng rng(5001);
  std::size_t failures = 0;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(16);
    std::vector<double> sims(n), d(n), ones(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      sims[i] = rng.uniform(0.05, 3.0);
      d[i] = rng.uniform(0.01, 1.0);
    }
    const int rank = 1 + static_cast<int>(rng.below(9));
    const double alpha = rng.uniform(0.0, 0.099);

    double plain = 1.0, weighted = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      plain *= sims[i];
      weighted *= d[i] * sims[i];
    }
    const double direct = (1.0 - alpha * rank) * weighted;
    const double s = ramn::match_score(sims, d, rank, alpha);
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    worst_rel = std::max({worst_rel, rel(s, direct), rel(ramn::match_score(sims, ones, rank, 0.0), plain),
                          rel(ramn::match_score(sims, d, rank, 0.0), weighted)});

    auto lower = d;
    lower[rng.below(n)] *= rng.uniform(0.1, 0.9);
    if (!(ramn::match_score(sims, d, rank + 1, alpha) < s) && alpha > 0.0) ++failures;
    if (!(ramn::match_score(sims, lower, rank, alpha) < s)) ++failures;
  }
  return verdict(failures == 0 && worst_rel <= 1e-9,
                 fmt::format("{} monotonicity failures, worst relative gap {:.3e} over 1000 instances (0, <= 1e-9)",
                             failures, worst_rel));
}

// 6. AP and RR against a brute-force P@k loop.
Outcome scorer_oracle() {
  std::size_t mismatches = 0;
  for (unsigned mask = 0; mask < 1024; ++mask) {
    bool rel[10];
    double sum = 0.0, first = 0.0;
    std::size_t relevant = 0;
    for (int k = 0; k < 10; ++k) rel[k] = (mask >> k) & 1;
    for (int k = 0; k < 10; ++k) {
      if (!rel[k]) continue;
      ++relevant;
      std::size_t hits = 0;
      for (int j = 0; j <= k; ++j) hits += rel[j] ? 1 : 0;
      sum += static_cast<double>(hits) / (k + 1);
      if (first == 0.0) first = 1.0 / (k + 1);
    }
    const double ap = relevant == 0 ? 0.0 : sum / static_cast<double>(relevant);
    const std::span<const bool> s(rel, 10);
    mismatches += eval::average_precision(s) != ap ? 1 : 0;
    mismatches += eval::reciprocal_rank(s) != first ? 1 : 0;
  }
  const bool example[] = {true, false, true};
  const double ap = eval::average_precision(std::span<const bool>(example, 3));
  return verdict(mismatches == 0 && std::abs(ap - 0.8333) <= 1e-4,
                 fmt::format("{} mismatches over 1024 patterns, AP[rel, irrel, rel] = {:.6f} (exact, 0.8333 +- 1e-4)",
                             mismatches, ap));
}

// 7. Dataset-scale checks; needs the SemEval files under $QR_SEMEVAL_DIR.
//   test2016.jsonl, test2017.jsonl           labeled instances
//   pred/{base,mismatch,full}_{2016,2017}.tsv output of `qr rank`
Outcome dataset_scale() {
  const char* env = std::getenv("QR_SEMEVAL_DIR");
  if (env == nullptr || *env == '\0') return {Status::Skip, "QR_SEMEVAL_DIR not set"};
  const fs::path dir(env);

  std::vector<std::string> parts;
  bool failed = false, complete = true;
  const auto note = [&](const std::string& part, std::optional<bool> ok, const std::string& text) {
    if (!ok) complete = false;
    if (ok && !*ok) failed = true;
    parts.push_back(fmt::format("{} {}{}", part, text, ok ? (*ok ? "" : " FAIL") : " skipped"));
  };

  std::map<std::string, eval::GoldLabels> gold;
  std::map<std::string, std::vector<text::RawInstance>> instances;
  for (const std::string year : {"2016", "2017"}) {
    const fs::path p = dir / fmt::format("test{}.jsonl", year);
    if (!fs::exists(p)) continue;
    instances[year] = text::read_instances(p);
    gold[year] = eval::GoldLabels::from_instances(instances[year]);
  }
  const auto map_of = [&](const std::string& year, const std::vector<eval::PredictionRow>& rows) {
    return eval::evaluate(rows, gold.at(year)).map_percent();
  };
  const auto pred = [&](const std::string& variant, const std::string& year) -> std::optional<double> {
    const fs::path p = dir / "pred" / fmt::format("{}_{}.tsv", variant, year);
    if (!gold.contains(year) || !fs::exists(p)) return std::nullopt;
    return map_of(year, eval::read_predictions(p));
  };
  // Relevant candidates first, each group in initial order.
  const auto ideal = [](const std::vector<text::RawInstance>& inst) {
    std::vector<eval::PredictionRow> rows;
    for (const auto& q : inst) {
      auto c = q.candidates;
      std::stable_sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
        const bool ra = a.label && text::is_relevant(*a.label), rb = b.label && text::is_relevant(*b.label);
        return ra != rb ? ra : a.initial_rank < b.initial_rank;
      });
      for (std::size_t k = 0; k < c.size(); ++k)
        rows.push_back({q.query_id, c[k].cand_id, static_cast<int>(k + 1), 1.0 / static_cast<double>(k + 1)});
    }
    return rows;
  };
  const auto initial = [](const std::vector<text::RawInstance>& inst) {
    std::vector<eval::PredictionRow> rows;
    for (const auto& q : inst)
      for (const auto& c : q.candidates) rows.push_back({q.query_id, c.cand_id, c.initial_rank, 0.0});
    return rows;
  };

  if (gold.contains("2016")) {
    const double m = map_of("2016", ideal(instances["2016"]));
    note("(a)", m == 88.57, fmt::format("ideal MAP 2016 {:.2f} (= 88.57)", m));
  } else {
    note("(a)", std::nullopt, "test2016.jsonl missing");
  }

  std::optional<bool> ordering;
  std::string ordering_text;
  for (const std::string year : {"2016", "2017"}) {
    const auto b = pred("base", year), m = pred("mismatch", year), f = pred("full", year);
    if (!b || !m || !f) continue;
    ordering = ordering.value_or(false) || (*f > *m && *m > *b);
    ordering_text += fmt::format("{} full {:.2f} > mismatch {:.2f} > base {:.2f}; ", year, *f, *m, *b);
  }
  note("(b)", ordering, ordering ? ordering_text + "(holds on one set)" : "prediction files missing");

  if (const auto f = pred("full", "2017")) {
    const double ir = map_of("2017", initial(instances["2017"]));
    note("(c)", *f > ir, fmt::format("2017 full {:.2f} > IR {:.2f}", *f, ir));
  } else {
    note("(c)", std::nullopt, "pred/full_2017.tsv or test2017.jsonl missing");
  }

  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : " | ") + p;
  return {failed ? Status::Fail : (complete ? Status::Pass : Status::Skip), detail};
}

// 8. Every subcommand twice with the same seed and inputs; all outputs compared bytewise.
Outcome determinism() {
  qr::testing::TempDir dir("determinism");
  const auto p = [&](const std::string& name) { return (dir / name).string(); };

  fs::copy_file(fs::path(QR_TEST_DATA) / "toy_corpus.jsonl", dir / "corpus.jsonl");
  const auto corpus = text::read_corpus(dir / "corpus.jsonl");
  std::vector<text::RawInstance> inst(2);
  inst[0] = {"q1", "", "renew my visa", {}};
  inst[1] = {"q2", "", "safe beach for kids", {}};
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& c = corpus[(3 * q + k) % corpus.size()];
      inst[q].candidates.push_back({c.id, c.subject, c.body, static_cast<int>(k + 1),
                                    k == q ? text::Label::Relevant : text::Label::Irrelevant});
    }
  text::write_instances(dir / "inst.jsonl", inst);
  eval::GoldLabels::from_instances(inst).save(dir / "gold.tsv");

  const std::vector<std::vector<std::string>> commands = {
      {"prepare", "--corpus", p("corpus.jsonl"), "--out", p("stats")},
      {"-q", "train", "--corpus", p("corpus.jsonl"), "--dev", p("corpus.jsonl"), "--stats", p("stats"), "--out",
       p("m.ckpt"), "--d-model", "16", "--d-ff", "32", "--max-epochs", "4", "--batch-size", "3", "--seed", "8"},
      {"tune-alpha", "--model", p("m.ckpt"), "--stats", p("stats"), "--dev", p("inst.jsonl"), "--out",
       p("alpha.json")},
      {"rank", "--model", p("m.ckpt"), "--stats", p("stats"), "--queries", p("inst.jsonl"), "--out", p("pred.tsv")},
      {"evaluate", "--pred", p("pred.tsv"), "--gold", p("gold.tsv"), "--out", p("eval.json")},
      {"reconstruct", "--model", p("m.ckpt"), "--stats", p("stats"), "--input", p("corpus.jsonl"), "--out",
       p("rec.tsv")},
  };
  const std::vector<std::string> outputs = {
      "stats/vocab.tsv", "stats/term_stats.tsv", "stats/manifest.json", "m.ckpt",          "m.ckpt.log.tsv",
      "m.ckpt.manifest.json", "alpha.json",    "alpha.json.manifest.json", "pred.tsv", "pred.tsv.manifest.json",
      "eval.json",       "eval.json.manifest.json", "rec.tsv",          "rec.tsv.manifest.json"};

  const auto run_all = [&](std::map<std::string, std::string>& snapshot) -> std::string {
    for (const auto& args : commands) {
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0) return fmt::format("{} failed: {}", args[args[0] == "-q" ? 1 : 0], err.str());
      snapshot["stdout:" + args[args[0] == "-q" ? 1 : 0]] = out.str();
    }
    for (const auto& o : outputs) {
      if (!fs::exists(dir / o)) return o + " was not written";
      snapshot[o] = qr::testing::slurp(dir / o);
    }
    return {};
  };
  std::map<std::string, std::string> first, second;
  if (auto e = run_all(first); !e.empty()) return {Status::Fail, e};
  if (auto e = run_all(second); !e.empty()) return {Status::Fail, e};
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : first)
    if (second.at(name) != bytes) differing.push_back(name);
  return verdict(differing.empty(),
                 fmt::format("{} of {} artifacts differ across 6 subcommands{}{} (byte-identical)", differing.size(),
                             first.size(), differing.empty() ? "" : ": ", fmt::join(differing, ", ")));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_check},
      {"causality and masking", causality_and_masking},
      {"overfit sanity", overfit},
      {"worked example", worked_example},
      {"matching algebra", matching_algebra},
      {"scorer oracle", scorer_oracle},
      {"dataset-scale reproduction", dataset_scale},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, fmt::format("exception: {}", e.what())};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    fmt::print("[{}] {} {}: {}\n", tag, i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
    failures += o.status == Status::Fail ? 1 : 0;
  }
  return failures == 0 ? 0 : 1;
}
