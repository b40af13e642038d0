#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace qr::text {

/// Corpus term frequencies tf(w|C) over stemmed tokens.
///
/// lookup() adds a constant (1 by default) so an unseen word never gets a
/// zero weight. Smoothing 0 gives raw counts.
class TermStats {
 public:
  explicit TermStats(std::uint64_t smoothing = 1) : smoothing_(smoothing) {}

  void add(std::string_view word, std::uint64_t n = 1);

  std::uint64_t count(std::string_view word) const;
  std::uint64_t lookup(std::string_view word) const { return count(word) + smoothing_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t smoothing() const { return smoothing_; }
  void set_smoothing(std::uint64_t s) { smoothing_ = s; }
  std::size_t distinct() const { return counts_.size(); }
  const std::map<std::string, std::uint64_t, std::less<>>& counts() const { return counts_; }

  /// "word<TAB>count" per line, count descending then word ascending.
  void save(const std::filesystem::path& path) const;
  static TermStats load(const std::filesystem::path& path, std::uint64_t smoothing = 1);

 private:
  std::map<std::string, std::uint64_t, std::less<>> counts_;
  std::uint64_t total_ = 0;
  std::uint64_t smoothing_;
};

}  // namespace qr::text
