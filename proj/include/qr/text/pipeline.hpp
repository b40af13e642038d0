#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qr/text/records.hpp"
#include "qr/text/term_stats.hpp"
#include "qr/text/vocabulary.hpp"

namespace qr::text {

inline constexpr std::size_t kMaxQuestionLength = 128;

/// A preprocessed question: stemmed tokens and their vocabulary ids.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

/// Stemmed tokens of subject followed by body, untruncated.
std::vector<std::string> analyze_question(std::string_view subject, std::string_view body);

/// Subject then body, tokenized, lowercased and stemmed, truncated to the
/// first max_len tokens. Out-of-vocabulary tokens map to UNK.
TokenSequence preprocess_question(std::string_view subject, std::string_view body, const Vocabulary& vocab,
                                  std::size_t max_len = kMaxQuestionLength);

/// Maps tokens through the vocabulary (no truncation).
TokenSequence to_sequence(std::vector<std::string> tokens, const Vocabulary& vocab);

/// Every stemmed token with corpus count >= min_count, ordered by count
/// descending, ties broken lexicographically.
Vocabulary build_vocabulary(std::span<const RawQuestion> corpus, std::size_t min_count = 1);

/// Occurrence counts of every stemmed token across the corpus.
TermStats term_frequency_stats(std::span<const RawQuestion> corpus, std::uint64_t smoothing = 1);

/// Normalized corpus frequency of each query token: lookup(w_i) / sum_k lookup(w_k).
/// A small value marks a rare, and therefore important, word.
std::vector<double> word_importance(const TokenSequence& query, const TermStats& stats);

}  // namespace qr::text
