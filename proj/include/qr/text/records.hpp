#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qr::text {

/// One forum question before preprocessing.
struct RawQuestion {
  std::string id;
  std::string subject;
  std::string body;
};

/// Gold relevance of a candidate. PerfectMatch and Relevant count as positive.
enum class Label { PerfectMatch, Relevant, Irrelevant };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);
inline bool is_relevant(Label label) { return label != Label::Irrelevant; }

struct RawCandidate {
  std::string cand_id;
  std::string subject;
  std::string body;
  int initial_rank = 0;
  std::optional<Label> label;
};

/// A new question with the candidates an external search engine returned for it.
struct RawInstance {
  std::string query_id;
  std::string subject;
  std::string body;
  std::vector<RawCandidate> candidates;
};

inline constexpr int kMaxCandidates = 10;

// Line-delimited JSON. Corpus lines: {"id", "subject", "body"}.
// Instance lines: {"query_id", "subject", "body", "candidates": [{"cand_id",
// "subject", "body", "initial_rank", "label"?}]}.
//
// Readers validate the schema and throw qr::Error with "file:line: problem".
std::vector<RawQuestion> read_corpus(const std::filesystem::path& path);
std::vector<RawInstance> read_instances(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<RawQuestion>& corpus);
void write_instances(const std::filesystem::path& path, const std::vector<RawInstance>& instances);

}  // namespace qr::text
