#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qr/autoencoder/model.hpp"
#include "qr/eval/metrics.hpp"
#include "qr/kernel/matrix.hpp"
#include "qr/text/pipeline.hpp"
#include "qr/text/records.hpp"

namespace qr::ramn {

using kernel::Matrix;

inline constexpr double kDefaultAlpha = 0.035;
inline constexpr int kMaxRank = text::kMaxCandidates;
// Per-word terms d_qi * max_j s_ij are floored here before the product.
inline constexpr double kScoreFloor = 1e-6;

/// S[i][j] = h_qi . h_Qj. Throws when the hidden widths differ.
Matrix interaction_matrix(const Matrix& query_hidden, const Matrix& candidate_hidden);

/// Row-wise max pooling of the interaction matrix.
std::vector<double> word_similarities(const Matrix& interaction);

/// 1 where the query token occurs in the candidate, else its importance f_qi.
std::vector<double> reduced_vector(const text::TokenSequence& query, const text::TokenSequence& candidate,
                                   std::span<const double> importance);

/// R = 1 - alpha * rank. Throws "rank factor non-positive" when alpha * rank >= 1.
double rank_factor(int initial_rank, double alpha);

/// ln R + sum_i ln max(d_qi * sim_i, floor).
double log_match_score(std::span<const double> word_sims, std::span<const double> reduced, int initial_rank,
                       double alpha);

/// exp(log_match_score(...)): R * prod_i max(d_qi * sim_i, floor).
double match_score(std::span<const double> word_sims, std::span<const double> reduced, int initial_rank,
                   double alpha);

struct Candidate {
  std::string cand_id;
  text::TokenSequence tokens;
  int initial_rank = 0;
  std::optional<text::Label> label;
};

struct RankingInstance {
  std::string query_id;
  text::TokenSequence query;
  std::vector<Candidate> candidates;
};

/// Preprocesses a raw instance with the shared text pipeline.
RankingInstance make_instance(const text::RawInstance& raw, const text::Vocabulary& vocab,
                              std::size_t max_len = text::kMaxQuestionLength);

struct ScoredCandidate {
  std::string cand_id;
  double score = 0.0;
  double log_score = 0.0;  // ordering key; -inf for an empty candidate
  int initial_rank = 0;
  int output_rank = 0;
};

struct ScoredRanking {
  std::string query_id;
  std::vector<ScoredCandidate> candidates;  // score descending, then initial_rank, then cand_id
};

struct MatchOptions {
  double alpha = kDefaultAlpha;
  bool lexical_mismatch = true;  // false: d_q is all ones
};

/// Alpha-independent part of each candidate's score: sum_i ln max(d_qi * sim_i, floor).
struct CandidateEvidence {
  std::string cand_id;
  int initial_rank = 0;
  bool empty = false;
  double log_product = 0.0;
};

struct InstanceEvidence {
  std::string query_id;
  std::vector<CandidateEvidence> candidates;
};

/// Encodes query and candidates, pools the interaction matrices and applies
/// the reduced vector.
InstanceEvidence collect_evidence(const RankingInstance& instance, const ae::AutoencoderModel& model,
                                  const text::TermStats& stats, bool lexical_mismatch = true);

/// Adds the rank factor for alpha and sorts. Empty candidates score 0 and sort last.
ScoredRanking rank_with_alpha(const InstanceEvidence& evidence, double alpha);

ScoredRanking rank_candidates(const RankingInstance& instance, const ae::AutoencoderModel& model,
                              const text::TermStats& stats, const MatchOptions& options = {});

/// {0.01, 0.015, ..., 0.1}: 19 values.
std::vector<double> default_alpha_grid();

struct AlphaSearchResult {
  double best_alpha = 0.0;
  double best_map = 0.0;
  std::vector<std::pair<double, double>> map_by_alpha;  // (alpha, MAP in [0, 1])
};

/// Dev MAP for every alpha in the grid; the highest wins, ties to the smaller alpha.
/// Throws on an empty dev set or grid, or a candidate without a gold label.
AlphaSearchResult grid_search_alpha(std::span<const InstanceEvidence> dev_evidence, const eval::GoldLabels& gold,
                                    std::span<const double> grid);

/// Prediction-file rows in output order.
std::vector<eval::PredictionRow> to_prediction_rows(std::span<const ScoredRanking> rankings);

}  // namespace qr::ramn
