#include "qr/ramn/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <fmt/format.h>

#include "qr/autoencoder/network.hpp"
#include "qr/error.hpp"
#include "qr/kernel/parallel.hpp"

namespace qr::ramn {

Matrix interaction_matrix(const Matrix& query_hidden, const Matrix& candidate_hidden) {
  if (query_hidden.cols() != candidate_hidden.cols()) {
    throw Error(fmt::format("interaction_matrix: hidden widths differ ({} vs {})", query_hidden.cols(),
                            candidate_hidden.cols()));
  }
  return kernel::matmul_nt(query_hidden, candidate_hidden);
}

std::vector<double> word_similarities(const Matrix& interaction) {
  if (interaction.cols() == 0) throw Error("word_similarities: candidate has no positions");
  std::vector<double> out(interaction.rows());
  for (std::size_t i = 0; i < interaction.rows(); ++i) {
    const auto row = interaction.row(i);
    out[i] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

std::vector<double> reduced_vector(const text::TokenSequence& query, const text::TokenSequence& candidate,
                                   std::span<const double> importance) {
  if (importance.size() != query.tokens.size()) {
    throw Error(fmt::format("reduced_vector: {} weights for {} query tokens", importance.size(), query.tokens.size()));
  }
  const std::unordered_set<std::string> present(candidate.tokens.begin(), candidate.tokens.end());
  std::vector<double> d(query.tokens.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = present.contains(query.tokens[i]) ? 1.0 : importance[i];
  return d;
}

double rank_factor(int initial_rank, double alpha) {
  if (alpha < 0.0) throw Error("alpha must be non-negative");
  const double r = 1.0 - alpha * static_cast<double>(initial_rank);
  if (r <= 0.0) throw Error("rank factor non-positive");
  return r;
}

namespace {

double log_product(std::span<const double> word_sims, std::span<const double> reduced) {
  if (word_sims.size() != reduced.size() || word_sims.empty()) {
    throw Error(fmt::format("match_score: {} similarities vs {} reduced weights", word_sims.size(), reduced.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < word_sims.size(); ++i) sum += std::log(std::max(reduced[i] * word_sims[i], kScoreFloor));
  return sum;
}

}  // namespace

double log_match_score(std::span<const double> word_sims, std::span<const double> reduced, int initial_rank,
                       double alpha) {
  return std::log(rank_factor(initial_rank, alpha)) + log_product(word_sims, reduced);
}

double match_score(std::span<const double> word_sims, std::span<const double> reduced, int initial_rank,
                   double alpha) {
  return std::exp(log_match_score(word_sims, reduced, initial_rank, alpha));
}

RankingInstance make_instance(const text::RawInstance& raw, const text::Vocabulary& vocab, std::size_t max_len) {
  RankingInstance inst;
  inst.query_id = raw.query_id;
  inst.query = text::preprocess_question(raw.subject, raw.body, vocab, max_len);
  for (const auto& c : raw.candidates) {
    inst.candidates.push_back(
        {c.cand_id, text::preprocess_question(c.subject, c.body, vocab, max_len), c.initial_rank, c.label});
  }
  return inst;
}

InstanceEvidence collect_evidence(const RankingInstance& instance, const ae::AutoencoderModel& model,
                                  const text::TermStats& stats, bool lexical_mismatch) {
  if (instance.query.empty()) throw Error(fmt::format("query '{}' is empty", instance.query_id));
  const Matrix query_hidden = ae::encode_sequence(model, instance.query.ids);
  const std::vector<double> importance = text::word_importance(instance.query, stats);
  const std::vector<double> ones(instance.query.size(), 1.0);

  InstanceEvidence out;
  out.query_id = instance.query_id;
  out.candidates.resize(instance.candidates.size());
  for (std::size_t c = 0; c < instance.candidates.size(); ++c) {
    const Candidate& cand = instance.candidates[c];
    CandidateEvidence& ev = out.candidates[c];
    ev.cand_id = cand.cand_id;
    ev.initial_rank = cand.initial_rank;
    if (cand.tokens.empty()) {
      ev.empty = true;
      ev.log_product = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Matrix cand_hidden = ae::encode_sequence(model, cand.tokens.ids);
    const auto sims = word_similarities(interaction_matrix(query_hidden, cand_hidden));
    const auto d_q = lexical_mismatch ? reduced_vector(instance.query, cand.tokens, importance) : ones;
    ev.log_product = log_product(sims, d_q);
  }
  return out;
}

ScoredRanking rank_with_alpha(const InstanceEvidence& evidence, double alpha) {
  ScoredRanking out;
  out.query_id = evidence.query_id;
  for (const auto& ev : evidence.candidates) {
    ScoredCandidate sc{ev.cand_id, 0.0, -std::numeric_limits<double>::infinity(), ev.initial_rank, 0};
    const double log_r = std::log(rank_factor(ev.initial_rank, alpha));
    if (!ev.empty) {
      sc.log_score = log_r + ev.log_product;
      sc.score = std::exp(sc.log_score);
    }
    out.candidates.push_back(std::move(sc));
  }
  std::sort(out.candidates.begin(), out.candidates.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.log_score != b.log_score) return a.log_score > b.log_score;
    if (a.initial_rank != b.initial_rank) return a.initial_rank < b.initial_rank;
    return a.cand_id < b.cand_id;
  });
  for (std::size_t i = 0; i < out.candidates.size(); ++i) out.candidates[i].output_rank = static_cast<int>(i + 1);
  return out;
}

ScoredRanking rank_candidates(const RankingInstance& instance, const ae::AutoencoderModel& model,
                              const text::TermStats& stats, const MatchOptions& options) {
  return rank_with_alpha(collect_evidence(instance, model, stats, options.lexical_mismatch), options.alpha);
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 2; k <= 20; ++k) grid.push_back(static_cast<double>(k) / 200.0);
  return grid;
}

std::vector<eval::PredictionRow> to_prediction_rows(std::span<const ScoredRanking> rankings) {
  std::vector<eval::PredictionRow> rows;
  for (const auto& r : rankings)
    for (const auto& c : r.candidates) rows.push_back({r.query_id, c.cand_id, c.output_rank, c.score});
  return rows;
}

AlphaSearchResult grid_search_alpha(std::span<const InstanceEvidence> dev_evidence, const eval::GoldLabels& gold,
                                    std::span<const double> grid) {
  if (dev_evidence.empty()) throw Error("grid_search_alpha: empty dev set");
  if (grid.empty()) throw Error("grid_search_alpha: empty grid");
  AlphaSearchResult result;
  bool first = true;
  for (double alpha : grid) {
    std::vector<ScoredRanking> rankings;
    rankings.reserve(dev_evidence.size());
    for (const auto& ev : dev_evidence) rankings.push_back(rank_with_alpha(ev, alpha));
    const auto rows = to_prediction_rows(rankings);
    const double map = eval::evaluate(rows, gold).map;
    result.map_by_alpha.emplace_back(alpha, map);
    if (first || map > result.best_map || (map == result.best_map && alpha < result.best_alpha)) {
      result.best_alpha = alpha;
      result.best_map = map;
      first = false;
    }
  }
  return result;
}

}  // namespace qr::ramn
