#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qr/text/records.hpp"

namespace qr::eval {

inline constexpr std::size_t kDefaultCutoff = 10;

/// Mean of P@k over relevant positions k <= cutoff, divided by the number of
/// relevant candidates in the instance (total_relevant, or the count in
/// `ranked` when not given). 0 when nothing is relevant.
double average_precision(std::span<const bool> ranked, std::size_t cutoff = kDefaultCutoff,
                         std::optional<std::size_t> total_relevant = std::nullopt);

/// 1/k for the first relevant position k <= cutoff, else 0.
double reciprocal_rank(std::span<const bool> ranked, std::size_t cutoff = kDefaultCutoff);

/// Gold relevance per (query_id, cand_id). File lines: "query_id<TAB>cand_id<TAB>label".
class GoldLabels {
 public:
  void add(const std::string& query_id, const std::string& cand_id, text::Label label);
  std::optional<text::Label> find(const std::string& query_id, const std::string& cand_id) const;
  bool has_query(const std::string& query_id) const { return labels_.contains(query_id); }
  std::size_t relevant_count(const std::string& query_id) const;
  std::size_t query_count() const { return labels_.size(); }
  const std::map<std::string, std::map<std::string, text::Label>>& queries() const { return labels_; }

  static GoldLabels load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Labels embedded in an instance file; unlabeled candidates are skipped.
  static GoldLabels from_instances(std::span<const text::RawInstance> instances);

 private:
  std::map<std::string, std::map<std::string, text::Label>> labels_;
};

/// One line of a predictions file: "query_id<TAB>cand_id<TAB>output_rank<TAB>score".
struct PredictionRow {
  std::string query_id;
  std::string cand_id;
  int output_rank = 0;
  double score = 0.0;
};

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows);

struct QueryResult {
  std::string query_id;
  double average_precision = 0.0;
  double reciprocal_rank = 0.0;
  std::size_t relevant = 0;
};

struct EvalReport {
  double map = 0.0;  // fraction in [0, 1]
  double mrr = 0.0;
  std::size_t queries = 0;
  std::size_t zero_relevant_queries = 0;
  std::vector<QueryResult> per_query;  // sorted by query_id

  double map_percent() const;  // x100, rounded to 2 decimals
  double mrr_percent() const;
};

/// Groups rows by query, orders each group by output_rank and averages AP/RR
/// over all predicted queries, zero-relevant ones included. Throws listing
/// every (query, candidate) pair without a gold label.
EvalReport evaluate(std::span<const PredictionRow> predictions, const GoldLabels& gold,
                    std::size_t cutoff = kDefaultCutoff);

/// {"MAP": .., "MRR": .., "queries": .., "zero_relevant_queries": ..}
std::string report_json(const EvalReport& report);

}  // namespace qr::eval
