#include "qr/text/records.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "qr/error.hpp"

namespace qr::text {
namespace {

using nlohmann::json;

std::string optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(fmt::format("field '{}' must be a string", key));
  return it->get<std::string>();
}

std::string required_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw Error(fmt::format("missing string field '{}'", key));
  auto value = it->get<std::string>();
  if (value.empty()) throw Error(fmt::format("field '{}' is empty", key));
  return value;
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw Error("record is not a JSON object");
      fn(obj);
    } catch (const json::exception& e) {
      throw Error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const Error& e) {
      throw Error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::PerfectMatch: return "PerfectMatch";
    case Label::Relevant: return "Relevant";
    case Label::Irrelevant: return "Irrelevant";
  }
  return "Irrelevant";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "PerfectMatch") return Label::PerfectMatch;
  if (text == "Relevant") return Label::Relevant;
  if (text == "Irrelevant") return Label::Irrelevant;
  return std::nullopt;
}

std::vector<RawQuestion> read_corpus(const std::filesystem::path& path) {
  std::vector<RawQuestion> out;
  std::set<std::string, std::less<>> seen;
  for_each_json_line(path, [&](const json& obj) {
    RawQuestion q{required_string(obj, "id"), optional_string(obj, "subject"), optional_string(obj, "body")};
    if (!seen.insert(q.id).second) throw Error(fmt::format("duplicate id '{}'", q.id));
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<RawInstance> read_instances(const std::filesystem::path& path) {
  std::vector<RawInstance> out;
  std::set<std::string, std::less<>> seen;
  for_each_json_line(path, [&](const json& obj) {
    RawInstance inst{required_string(obj, "query_id"), optional_string(obj, "subject"),
                     optional_string(obj, "body"), {}};
    if (!seen.insert(inst.query_id).second) throw Error(fmt::format("duplicate query_id '{}'", inst.query_id));
    const auto cands = obj.find("candidates");
    if (cands == obj.end() || !cands->is_array()) throw Error("missing array field 'candidates'");
    if (cands->size() > static_cast<std::size_t>(kMaxCandidates)) {
      throw Error(fmt::format("query '{}' has {} candidates (max {})", inst.query_id, cands->size(), kMaxCandidates));
    }
    std::set<int> ranks;
    std::set<std::string, std::less<>> cand_ids;
    for (const auto& c : *cands) {
      if (!c.is_object()) throw Error("candidate is not a JSON object");
      RawCandidate cand;
      cand.cand_id = required_string(c, "cand_id");
      cand.subject = optional_string(c, "subject");
      cand.body = optional_string(c, "body");
      const auto rank = c.find("initial_rank");
      if (rank == c.end() || !rank->is_number_integer()) throw Error("missing integer field 'initial_rank'");
      cand.initial_rank = rank->get<int>();
      if (cand.initial_rank < 1 || cand.initial_rank > kMaxCandidates) {
        throw Error(fmt::format("candidate '{}' initial_rank {} outside 1..{}", cand.cand_id, cand.initial_rank,
                                kMaxCandidates));
      }
      if (!ranks.insert(cand.initial_rank).second) {
        throw Error(fmt::format("query '{}' repeats initial_rank {}", inst.query_id, cand.initial_rank));
      }
      if (!cand_ids.insert(cand.cand_id).second) throw Error(fmt::format("duplicate cand_id '{}'", cand.cand_id));
      if (const auto label = c.find("label"); label != c.end() && !label->is_null()) {
        if (!label->is_string()) throw Error("field 'label' must be a string");
        cand.label = parse_label(label->get<std::string>());
        if (!cand.label) throw Error(fmt::format("unknown label '{}'", label->get<std::string>()));
      }
      inst.candidates.push_back(std::move(cand));
    }
    out.push_back(std::move(inst));
  });
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<RawQuestion>& corpus) {
  std::vector<json> rows;
  rows.reserve(corpus.size());
  for (const auto& q : corpus) rows.push_back({{"id", q.id}, {"subject", q.subject}, {"body", q.body}});
  write_lines(path, rows);
}

void write_instances(const std::filesystem::path& path, const std::vector<RawInstance>& instances) {
  std::vector<json> rows;
  rows.reserve(instances.size());
  for (const auto& inst : instances) {
    json cands = json::array();
    for (const auto& c : inst.candidates) {
      json row = {{"cand_id", c.cand_id}, {"subject", c.subject}, {"body", c.body}, {"initial_rank", c.initial_rank}};
      if (c.label) row["label"] = std::string(to_string(*c.label));
      cands.push_back(std::move(row));
    }
    rows.push_back({{"query_id", inst.query_id}, {"subject", inst.subject}, {"body", inst.body}, {"candidates", cands}});
  }
  write_lines(path, rows);
}

}  // namespace qr::text
