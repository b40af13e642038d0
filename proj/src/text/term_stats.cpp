#include "qr/text/term_stats.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::text {

void TermStats::add(std::string_view word, std::uint64_t n) {
  if (n == 0) return;
  auto it = counts_.find(word);
  if (it == counts_.end()) it = counts_.emplace(std::string(word), 0).first;
  it->second += n;
  total_ += n;
}

std::uint64_t TermStats::count(std::string_view word) const {
  const auto it = counts_.find(word);
  return it == counts_.end() ? 0 : it->second;
}

void TermStats::save(const std::filesystem::path& path) const {
  std::vector<std::pair<std::string_view, std::uint64_t>> rows(counts_.begin(), counts_.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& [word, count] : rows) out << word << '\t' << count << '\n';
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

TermStats TermStats::load(const std::filesystem::path& path, std::uint64_t smoothing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  TermStats stats(smoothing);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(fmt::format("{}:{}: expected word<TAB>count", path.string(), line_no));
    }
    try {
      stats.add(std::string_view(line).substr(0, tab), std::stoull(line.substr(tab + 1)));
    } catch (const std::logic_error&) {
      throw Error(fmt::format("{}:{}: bad count", path.string(), line_no));
    }
  }
  return stats;
}

}  // namespace qr::text
