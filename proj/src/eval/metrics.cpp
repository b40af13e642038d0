#include "qr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <json.hpp>

#include "qr/error.hpp"

namespace qr::eval {
namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

}  // namespace

double average_precision(std::span<const bool> ranked, std::size_t cutoff, std::optional<std::size_t> total_relevant) {
  const std::size_t relevant =
      total_relevant.value_or(static_cast<std::size_t>(std::count(ranked.begin(), ranked.end(), true)));
  if (relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  const std::size_t n = std::min(cutoff, ranked.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (!ranked[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(relevant);
}

double reciprocal_rank(std::span<const bool> ranked, std::size_t cutoff) {
  const std::size_t n = std::min(cutoff, ranked.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (ranked[k]) return 1.0 / static_cast<double>(k + 1);
  }
  return 0.0;
}

void GoldLabels::add(const std::string& query_id, const std::string& cand_id, text::Label label) {
  auto& row = labels_[query_id];
  if (!row.emplace(cand_id, label).second) {
    throw Error(fmt::format("gold: duplicate label for ({}, {})", query_id, cand_id));
  }
}

std::optional<text::Label> GoldLabels::find(const std::string& query_id, const std::string& cand_id) const {
  const auto q = labels_.find(query_id);
  if (q == labels_.end()) return std::nullopt;
  const auto c = q->second.find(cand_id);
  if (c == q->second.end()) return std::nullopt;
  return c->second;
}

std::size_t GoldLabels::relevant_count(const std::string& query_id) const {
  const auto q = labels_.find(query_id);
  if (q == labels_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(q->second.begin(), q->second.end(),
                                                 [](const auto& kv) { return text::is_relevant(kv.second); }));
}

GoldLabels GoldLabels::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  GoldLabels gold;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty()) {
      throw Error(fmt::format("{}:{}: expected query_id<TAB>cand_id<TAB>label", path.string(), line_no));
    }
    const auto label = text::parse_label(f[2]);
    if (!label) throw Error(fmt::format("{}:{}: unknown label '{}'", path.string(), line_no, f[2]));
    try {
      gold.add(f[0], f[1], *label);
    } catch (const Error& e) {
      throw Error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return gold;
}

void GoldLabels::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& [qid, row] : labels_)
    for (const auto& [cid, label] : row) out << qid << '\t' << cid << '\t' << text::to_string(label) << '\n';
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

GoldLabels GoldLabels::from_instances(std::span<const text::RawInstance> instances) {
  GoldLabels gold;
  for (const auto& inst : instances)
    for (const auto& c : inst.candidates)
      if (c.label) gold.add(inst.query_id, c.cand_id, *c.label);
  return gold;
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_tabs(line);
    if (f.size() != 4 || f[0].empty() || f[1].empty()) {
      throw Error(fmt::format("{}:{}: expected query_id<TAB>cand_id<TAB>output_rank<TAB>score", path.string(),
                              line_no));
    }
    PredictionRow row{f[0], f[1], 0, 0.0};
    try {
      std::size_t used = 0;
      row.output_rank = std::stoi(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("rank");
      row.score = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw Error(fmt::format("{}:{}: bad output_rank or score", path.string(), line_no));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& r : rows) out << fmt::format("{}\t{}\t{}\t{:.6f}\n", r.query_id, r.cand_id, r.output_rank, r.score);
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

double EvalReport::map_percent() const { return round2(map * 100.0); }
double EvalReport::mrr_percent() const { return round2(mrr * 100.0); }

EvalReport evaluate(std::span<const PredictionRow> predictions, const GoldLabels& gold, std::size_t cutoff) {
  std::map<std::string, std::vector<const PredictionRow*>> by_query;
  for (const auto& row : predictions) by_query[row.query_id].push_back(&row);

  std::vector<std::string> missing;
  for (const auto& [qid, rows] : by_query) {
    for (const auto* r : rows) {
      if (!gold.find(qid, r->cand_id)) missing.push_back(fmt::format("({}, {})", qid, r->cand_id));
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing gold labels for";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }

  EvalReport report;
  double ap_sum = 0.0;
  double rr_sum = 0.0;
  for (auto& [qid, rows] : by_query) {
    std::stable_sort(rows.begin(), rows.end(), [](const PredictionRow* a, const PredictionRow* b) {
      return a->output_rank != b->output_rank ? a->output_rank < b->output_rank : a->cand_id < b->cand_id;
    });
    const auto flags = std::make_unique<bool[]>(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) flags[k] = text::is_relevant(*gold.find(qid, rows[k]->cand_id));
    const std::span<const bool> ranked(flags.get(), rows.size());
    QueryResult q{qid, 0.0, 0.0, gold.relevant_count(qid)};
    q.average_precision = average_precision(ranked, cutoff, q.relevant);
    q.reciprocal_rank = reciprocal_rank(ranked, cutoff);
    ap_sum += q.average_precision;
    rr_sum += q.reciprocal_rank;
    if (q.relevant == 0) ++report.zero_relevant_queries;
    report.per_query.push_back(std::move(q));
  }
  report.queries = report.per_query.size();
  if (report.queries > 0) {
    report.map = ap_sum / static_cast<double>(report.queries);
    report.mrr = rr_sum / static_cast<double>(report.queries);
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["MAP"] = report.map_percent();
  j["MRR"] = report.mrr_percent();
  j["queries"] = report.queries;
  j["zero_relevant_queries"] = report.zero_relevant_queries;
  return j.dump(2);
}

}  // namespace qr::eval
