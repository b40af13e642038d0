#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qr/autoencoder/checkpoint.hpp"
#include "qr/autoencoder/embeddings.hpp"
#include "qr/autoencoder/network.hpp"
#include "qr/autoencoder/trainer.hpp"
#include "qr/error.hpp"
#include "qr/eval/metrics.hpp"
#include "qr/hash.hpp"
#include "qr/kernel/parallel.hpp"
#include "qr/ramn/matcher.hpp"
#include "qr/text/pipeline.hpp"

namespace qr::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kVocabFile = "vocab.tsv";
constexpr const char* kStatsFile = "term_stats.tsv";

// Collects every problem found before work starts so all of them are reported.
class Problems {
 public:
  void add(std::string msg) { items_.push_back(std::move(msg)); }
  void need_file(const std::string& flag, const std::string& path) {
    if (path.empty()) return;
    if (!fs::is_regular_file(path)) add(fmt::format("{}: no such file: {}", flag, path));
  }
  void need_stats_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) {
      add(fmt::format("--stats: no such directory: {}", dir));
      return;
    }
    need_file("--stats", (fs::path(dir) / kVocabFile).string());
    need_file("--stats", (fs::path(dir) / kStatsFile).string());
  }
  void need_parent(const std::string& flag, const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) add(fmt::format("{}: no such directory: {}", flag, parent.string()));
  }
  bool empty() const { return items_.empty(); }
  int report(std::ostream& err) const {
    for (const auto& p : items_) err << "error: " << p << '\n';
    return kExitUsage;
  }

 private:
  std::vector<std::string> items_;
};

class Manifest {
 public:
  explicit Manifest(std::string command) { j_["command"] = std::move(command); }
  json& config() { return j_["config"]; }
  void input(const std::string& name, const fs::path& path) {
    j_["inputs"][name] = {{"path", path.generic_string()}, {"fnv1a64", hex64(hash_file(path))}};
  }
  void output(const fs::path& path) { j_["outputs"].push_back(path.generic_string()); }
  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    out << j_.dump(2) << '\n';
  }

 private:
  json j_;
};

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

struct Stats {
  text::Vocabulary vocab;
  text::TermStats terms;
};

Stats load_stats(const fs::path& dir) {
  return {text::Vocabulary::load(dir / kVocabFile), text::TermStats::load(dir / kStatsFile)};
}

void add_stats_inputs(Manifest& m, const fs::path& dir) {
  m.input("vocab", dir / kVocabFile);
  m.input("term_stats", dir / kStatsFile);
}

std::vector<text::TokenSequence> sequences(const std::vector<text::RawQuestion>& corpus, const text::Vocabulary& vocab,
                                           std::size_t max_len, std::size_t& skipped) {
  std::vector<text::TokenSequence> out;
  out.reserve(corpus.size());
  skipped = 0;
  for (const auto& q : corpus) {
    auto seq = text::preprocess_question(q.subject, q.body, vocab, max_len);
    if (seq.empty()) {
      ++skipped;
      continue;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<ramn::InstanceEvidence> gather_evidence(const std::vector<text::RawInstance>& raw,
                                                    const ae::AutoencoderModel& model, const Stats& stats,
                                                    std::size_t max_len, bool lexical) {
  std::vector<ramn::InstanceEvidence> evidence(raw.size());
  kernel::parallel_for(raw.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto inst = ramn::make_instance(raw[i], stats.vocab, max_len);
      evidence[i] = ramn::collect_evidence(inst, model, stats.terms, lexical);
    }
  });
  return evidence;
}

void check_alpha(Problems& p, double alpha) {
  if (alpha < 0.0 || alpha * ramn::kMaxRank >= 1.0) {
    p.add(fmt::format("--alpha: {} outside [0, {}); the rank factor must stay positive", alpha,
                      1.0 / ramn::kMaxRank));
  }
}

// prepare ----------------------------------------------------------------

struct PrepareArgs {
  std::string corpus, out;
  std::size_t min_count = 1;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out, std::ostream& err) {
  Problems p;
  p.need_file("--corpus", a.corpus);
  if (a.min_count < 1) p.add("--min-count: must be >= 1");
  if (!p.empty()) return p.report(err);

  const auto corpus = text::read_corpus(a.corpus);
  const auto vocab = text::build_vocabulary(corpus, a.min_count);
  const auto stats = text::term_frequency_stats(corpus);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  vocab.save(dir / kVocabFile);
  stats.save(dir / kStatsFile);

  Manifest m("prepare");
  m.config() = {{"min_count", a.min_count}};
  m.input("corpus", a.corpus);
  m.output(dir / kVocabFile);
  m.output(dir / kStatsFile);
  m.write(dir / "manifest.json");
  out << fmt::format("questions {}  vocabulary {}  tokens {}\n", corpus.size(), vocab.size(), stats.total());
  return kExitOk;
}

// train ------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, dev, stats, out, embeddings, log;
  std::size_t d_model = 200, d_ff = 800, layers = 2, max_len = text::kMaxQuestionLength;
  bool no_positional = false;
  ae::TrainConfig train;
};

int cmd_train(const TrainArgs& a, bool quiet, std::ostream& out, std::ostream& err) {
  Problems p;
  p.need_file("--corpus", a.corpus);
  p.need_file("--dev", a.dev);
  p.need_stats_dir(a.stats);
  p.need_file("--embeddings", a.embeddings);
  p.need_parent("--out", a.out);
  if (a.d_model == 0 || a.d_ff == 0 || a.layers == 0) p.add("--d-model, --d-ff and --layers must be >= 1");
  if (a.max_len == 0) p.add("--max-len: must be >= 1");
  try {
    ae::validate(a.train);
  } catch (const Error& e) {
    p.add(e.what());
  }
  if (!p.empty()) return p.report(err);

  const Stats stats = load_stats(a.stats);
  std::size_t skipped_train = 0, skipped_dev = 0;
  const auto corpus = sequences(text::read_corpus(a.corpus), stats.vocab, a.max_len, skipped_train);
  const auto dev = sequences(text::read_corpus(a.dev), stats.vocab, a.max_len, skipped_dev);

  ae::ModelConfig mc{.vocab_size = stats.vocab.size(),
                     .d_model = a.d_model,
                     .d_k = a.d_model,
                     .d_ff = a.d_ff,
                     .layers = a.layers,
                     .positional_encoding = !a.no_positional};
  ae::validate(mc);
  kernel::Rng rng(a.train.seed);
  auto model = ae::init_model(mc, rng);
  std::size_t covered = 0;
  if (!a.embeddings.empty()) {
    auto pre = ae::load_pretrained_embeddings(a.embeddings, stats.vocab, a.d_model, rng);
    model.params.embedding = std::move(pre.table);
    covered = pre.covered;
  }

  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.tsv") : fs::path(a.log);
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw Error(fmt::format("cannot write {}", log_path.string()));
  log << "epoch\ttrain\tdev\n";
  auto result = ae::train(std::move(model), corpus, dev, a.train, [&](const ae::EpochRecord& r) {
    log << ae::format_epoch(r) << '\n';
    log.flush();
    if (!quiet) out << ae::format_epoch(r) << '\n' << std::flush;
  });
  ae::save_checkpoint(result.model, stats.vocab.hash(), a.out);

  Manifest m("train");
  m.config() = {{"d_model", a.d_model},
                {"d_ff", a.d_ff},
                {"layers", a.layers},
                {"positional_encoding", !a.no_positional},
                {"max_len", a.max_len},
                {"batch_size", a.train.batch_size},
                {"learning_rate", a.train.learning_rate},
                {"patience", a.train.patience},
                {"max_epochs", a.train.max_epochs},
                {"seed", a.train.seed}};
  m.input("corpus", a.corpus);
  m.input("dev", a.dev);
  add_stats_inputs(m, a.stats);
  if (!a.embeddings.empty()) m.input("embeddings", a.embeddings);
  m.output(a.out);
  m.output(log_path);
  m.write(manifest_path(a.out));

  out << fmt::format("sequences {} (skipped {} empty)  dev {} (skipped {})  best epoch {}  epochs {}{}\n",
                     corpus.size(), skipped_train, dev.size(), skipped_dev, result.best_epoch, result.log.size(),
                     result.early_stopped ? "  early stop" : "");
  if (!a.embeddings.empty()) out << fmt::format("pretrained rows {}/{}\n", covered, stats.vocab.size() - 2);
  return kExitOk;
}

// shared by tune-alpha / rank / reconstruct -------------------------------

struct ModelArgs {
  std::string model, stats;
  std::size_t max_len = text::kMaxQuestionLength;
};

void check_model_args(Problems& p, const ModelArgs& a) {
  p.need_file("--model", a.model);
  p.need_stats_dir(a.stats);
  if (a.max_len == 0) p.add("--max-len: must be >= 1");
}

std::pair<ae::AutoencoderModel, Stats> load_model(const ModelArgs& a) {
  Stats stats = load_stats(a.stats);
  auto model = ae::load_checkpoint(a.model, stats.vocab.hash());
  return {std::move(model), std::move(stats)};
}

// tune-alpha -------------------------------------------------------------

struct TuneArgs {
  ModelArgs m;
  std::string dev, gold, out;
  bool no_mismatch = false;
};

int cmd_tune(const TuneArgs& a, std::ostream& out, std::ostream& err) {
  Problems p;
  check_model_args(p, a.m);
  p.need_file("--dev", a.dev);
  p.need_file("--gold", a.gold);
  if (!a.out.empty()) p.need_parent("--out", a.out);
  if (!p.empty()) return p.report(err);

  const auto [model, stats] = load_model(a.m);
  const auto raw = text::read_instances(a.dev);
  const auto gold = a.gold.empty() ? eval::GoldLabels::from_instances(raw) : eval::GoldLabels::load(a.gold);
  const auto evidence = gather_evidence(raw, model, stats, a.m.max_len, !a.no_mismatch);
  const auto grid = ramn::default_alpha_grid();
  const auto result = ramn::grid_search_alpha(evidence, gold, grid);

  json j;
  j["best_alpha"] = result.best_alpha;
  j["best_map"] = std::round(result.best_map * 10000.0) / 100.0;
  j["lexical_mismatch"] = !a.no_mismatch;
  for (const auto& [alpha, map] : result.map_by_alpha)
    j["grid"].push_back({{"alpha", alpha}, {"map", std::round(map * 10000.0) / 100.0}});
  const std::string text = j.dump(2) + "\n";
  out << text;

  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", a.out));
    f << text;
    Manifest m("tune-alpha");
    m.config() = {{"max_len", a.m.max_len}, {"lexical_mismatch", !a.no_mismatch}};
    m.input("model", a.m.model);
    add_stats_inputs(m, a.m.stats);
    m.input("dev", a.dev);
    if (!a.gold.empty()) m.input("gold", a.gold);
    m.output(a.out);
    m.write(manifest_path(a.out));
  }
  return kExitOk;
}

// rank -------------------------------------------------------------------

struct RankArgs {
  ModelArgs m;
  std::string queries, out;
  double alpha = ramn::kDefaultAlpha;
  bool no_mismatch = false;
};

int cmd_rank(const RankArgs& a, std::ostream& out, std::ostream& err) {
  Problems p;
  check_model_args(p, a.m);
  p.need_file("--queries", a.queries);
  p.need_parent("--out", a.out);
  check_alpha(p, a.alpha);
  if (!p.empty()) return p.report(err);

  const auto [model, stats] = load_model(a.m);
  const auto raw = text::read_instances(a.queries);
  const auto evidence = gather_evidence(raw, model, stats, a.m.max_len, !a.no_mismatch);
  std::vector<ramn::ScoredRanking> rankings;
  rankings.reserve(evidence.size());
  for (const auto& ev : evidence) rankings.push_back(ramn::rank_with_alpha(ev, a.alpha));
  eval::write_predictions(a.out, ramn::to_prediction_rows(rankings));

  Manifest m("rank");
  m.config() = {{"alpha", a.alpha}, {"lexical_mismatch", !a.no_mismatch}, {"max_len", a.m.max_len}};
  m.input("model", a.m.model);
  add_stats_inputs(m, a.m.stats);
  m.input("queries", a.queries);
  m.output(a.out);
  m.write(manifest_path(a.out));
  out << fmt::format("ranked {} queries\n", rankings.size());
  return kExitOk;
}

// evaluate ---------------------------------------------------------------

struct EvalArgs {
  std::string pred, gold, out;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  Problems p;
  p.need_file("--pred", a.pred);
  p.need_file("--gold", a.gold);
  if (!a.out.empty()) p.need_parent("--out", a.out);
  if (!p.empty()) return p.report(err);

  const auto report = eval::evaluate(eval::read_predictions(a.pred), eval::GoldLabels::load(a.gold));
  const std::string text = eval::report_json(report) + "\n";
  out << text;
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", a.out));
    f << text;
    Manifest m("evaluate");
    m.config() = json::object();
    m.input("pred", a.pred);
    m.input("gold", a.gold);
    m.output(a.out);
    m.write(manifest_path(a.out));
  }
  return kExitOk;
}

// reconstruct ------------------------------------------------------------

struct ReconstructArgs {
  ModelArgs m;
  std::string input, out;
  std::size_t limit = 0;
};

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream& err) {
  Problems p;
  check_model_args(p, a.m);
  p.need_file("--input", a.input);
  p.need_parent("--out", a.out);
  if (!p.empty()) return p.report(err);

  const auto [model, stats] = load_model(a.m);
  auto corpus = text::read_corpus(a.input);
  if (a.limit > 0 && corpus.size() > a.limit) corpus.resize(a.limit);

  std::vector<std::string> lines(corpus.size());
  std::vector<std::size_t> hits(corpus.size(), 0), totals(corpus.size(), 0);
  kernel::parallel_for(corpus.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto seq = text::preprocess_question(corpus[i].subject, corpus[i].body, stats.vocab, a.m.max_len);
      std::string decoded;
      if (!seq.empty()) {
        const auto ids = ae::greedy_reconstruct(model, seq.ids);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (k > 0) decoded += ' ';
          decoded += stats.vocab.word(ids[k]);
          hits[i] += ids[k] == seq.ids[k] ? 1 : 0;
        }
        totals[i] = seq.size();
      }
      std::string input;
      for (std::size_t k = 0; k < seq.size(); ++k) {
        if (k > 0) input += ' ';
        input += stats.vocab.word(seq.ids[k]);
      }
      lines[i] = fmt::format("{}\t{}\t{}\t{}/{}\n", corpus[i].id, input, decoded, hits[i], totals[i]);
    }
  });

  std::ofstream f(a.out, std::ios::binary);
  if (!f) throw Error(fmt::format("cannot write {}", a.out));
  f << "id\tinput\treconstruction\tmatched\n";
  for (const auto& l : lines) f << l;
  f.close();

  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    hit += hits[i];
    total += totals[i];
  }
  Manifest m("reconstruct");
  m.config() = {{"max_len", a.m.max_len}, {"limit", a.limit}};
  m.input("model", a.m.model);
  add_stats_inputs(m, a.m.stats);
  m.input("input", a.input);
  m.output(a.out);
  m.write(manifest_path(a.out));
  out << fmt::format("token accuracy {:.4f} ({}/{})\n", total ? static_cast<double>(hit) / total : 0.0, hit, total);
  return kExitOk;
}

void add_model_options(CLI::App* sub, ModelArgs& m) {
  sub->add_option("--model", m.model, "Checkpoint from train")->required();
  sub->add_option("--stats", m.stats, "Directory written by prepare")->required();
  sub->add_option("--max-len", m.max_len, "Tokens kept per question")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised question retrieval: attention autoencoder + reduced attentive matching", "qr"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress per-epoch progress");

  PrepareArgs prep;
  auto* s_prep = app.add_subcommand("prepare", "Build vocabulary and term statistics from an unlabeled corpus");
  s_prep->add_option("--corpus", prep.corpus, "Corpus JSONL")->required();
  s_prep->add_option("--out", prep.out, "Output directory")->required();
  s_prep->add_option("--min-count", prep.min_count, "Minimum count for a vocabulary word")->capture_default_str();

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "Train the autoencoder");
  s_train->add_option("--corpus", tr.corpus, "Training corpus JSONL")->required();
  s_train->add_option("--dev", tr.dev, "Dev corpus JSONL for early stopping")->required();
  s_train->add_option("--stats", tr.stats, "Directory written by prepare")->required();
  s_train->add_option("--out", tr.out, "Checkpoint path")->required();
  s_train->add_option("--embeddings", tr.embeddings, "Pretrained vectors, \"word v1 ... vd\" per line");
  s_train->add_option("--log", tr.log, "Training log (default <out>.log.tsv)");
  s_train->add_option("--d-model", tr.d_model)->capture_default_str();
  s_train->add_option("--d-ff", tr.d_ff)->capture_default_str();
  s_train->add_option("--layers", tr.layers)->capture_default_str();
  s_train->add_option("--max-len", tr.max_len)->capture_default_str();
  s_train->add_flag("--no-positional", tr.no_positional, "Disable sinusoidal positional encoding");
  s_train->add_option("--batch-size", tr.train.batch_size)->capture_default_str();
  s_train->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  s_train->add_option("--patience", tr.train.patience)->capture_default_str();
  s_train->add_option("--max-epochs", tr.train.max_epochs)->capture_default_str();
  s_train->add_option("--seed", tr.train.seed)->capture_default_str();

  TuneArgs tune;
  auto* s_tune = app.add_subcommand("tune-alpha", "Grid-search the rank-factor weight on labeled dev instances");
  add_model_options(s_tune, tune.m);
  s_tune->add_option("--dev", tune.dev, "Dev instances JSONL")->required();
  s_tune->add_option("--gold", tune.gold, "Gold TSV (default: labels inside --dev)");
  s_tune->add_option("--out", tune.out, "Write the grid report here as well");
  s_tune->add_flag("--no-mismatch", tune.no_mismatch, "Disable the lexical-mismatch reduction");

  RankArgs rk;
  auto* s_rank = app.add_subcommand("rank", "Rerank the candidates of every query");
  add_model_options(s_rank, rk.m);
  s_rank->add_option("--queries", rk.queries, "Instances JSONL")->required();
  s_rank->add_option("--out", rk.out, "Predictions TSV")->required();
  s_rank->add_option("--alpha", rk.alpha, "Rank-factor weight; 0 disables it")->capture_default_str();
  s_rank->add_flag("--no-mismatch", rk.no_mismatch, "Disable the lexical-mismatch reduction");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("evaluate", "MAP and MRR of a predictions file");
  s_eval->add_option("--pred", ev.pred, "Predictions TSV")->required();
  s_eval->add_option("--gold", ev.gold, "Gold TSV")->required();
  s_eval->add_option("--out", ev.out, "Write the report here as well");

  ReconstructArgs rc;
  auto* s_rec = app.add_subcommand("reconstruct", "Greedy-decode questions through the autoencoder");
  add_model_options(s_rec, rc.m);
  s_rec->add_option("--input", rc.input, "Corpus JSONL")->required();
  s_rec->add_option("--out", rc.out, "Output TSV")->required();
  s_rec->add_option("--limit", rc.limit, "Only the first N questions (0 = all)")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (s_prep->parsed()) return cmd_prepare(prep, out, err);
    if (s_train->parsed()) return cmd_train(tr, quiet, out, err);
    if (s_tune->parsed()) return cmd_tune(tune, out, err);
    if (s_rank->parsed()) return cmd_rank(rk, out, err);
    if (s_eval->parsed()) return cmd_evaluate(ev, out, err);
    if (s_rec->parsed()) return cmd_reconstruct(rc, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace qr::cli
