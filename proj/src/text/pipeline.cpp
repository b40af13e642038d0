#include "qr/text/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include "qr/error.hpp"
#include "qr/text/tokenizer.hpp"

namespace qr::text {

std::vector<std::string> analyze_question(std::string_view subject, std::string_view body) {
  auto tokens = analyze(subject);
  auto rest = analyze(body);
  tokens.insert(tokens.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return tokens;
}

TokenSequence to_sequence(std::vector<std::string> tokens, const Vocabulary& vocab) {
  TokenSequence seq;
  seq.ids.reserve(tokens.size());
  for (const auto& t : tokens) seq.ids.push_back(vocab.id(t));
  seq.tokens = std::move(tokens);
  return seq;
}

TokenSequence preprocess_question(std::string_view subject, std::string_view body, const Vocabulary& vocab,
                                  std::size_t max_len) {
  if (max_len == 0) throw Error("preprocess_question: max_len must be >= 1");
  auto tokens = analyze_question(subject, body);
  if (tokens.size() > max_len) tokens.resize(max_len);
  return to_sequence(std::move(tokens), vocab);
}

Vocabulary build_vocabulary(std::span<const RawQuestion> corpus, std::size_t min_count) {
  if (min_count == 0) throw Error("build_vocabulary: min_count must be >= 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& q : corpus) {
    for (auto& t : analyze_question(q.subject, q.body)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (auto& [word, count] : counts) {
    if (count >= min_count) entries.emplace_back(word, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return Vocabulary::from_entries(std::move(entries));
}

TermStats term_frequency_stats(std::span<const RawQuestion> corpus, std::uint64_t smoothing) {
  TermStats stats(smoothing);
  for (const auto& q : corpus) {
    for (const auto& t : analyze_question(q.subject, q.body)) stats.add(t);
  }
  return stats;
}

std::vector<double> word_importance(const TokenSequence& query, const TermStats& stats) {
  if (query.tokens.empty()) throw Error("empty query");
  std::vector<double> weights;
  weights.reserve(query.tokens.size());
  double sum = 0.0;
  for (const auto& t : query.tokens) {
    const auto w = static_cast<double>(stats.lookup(t));
    weights.push_back(w);
    sum += w;
  }
  if (sum <= 0.0) throw Error("word_importance: all query words have zero frequency");
  for (auto& w : weights) w /= sum;
  return weights;
}

}  // namespace qr::text
