#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qr::text {

using TokenId = std::uint32_t;

/// Word <-> index mapping with two reserved slots: PAD (0) and UNK (1).
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kPadWord = "<pad>";
  static constexpr std::string_view kUnkWord = "<unk>";

  Vocabulary();

  /// Builds from (word, count) entries already in index order (reserved words excluded).
  static Vocabulary from_entries(std::vector<std::pair<std::string, std::uint64_t>> entries);

  std::size_t size() const { return words_.size(); }
  TokenId id(std::string_view word) const;  // UNK when absent
  bool contains(std::string_view word) const;
  const std::string& word(TokenId id) const;
  std::uint64_t count(TokenId id) const { return counts_.at(id); }

  /// FNV-1a over the words in index order; stored in checkpoints.
  std::uint64_t hash() const;

  /// "word<TAB>count" per line, in index order, reserved entries first.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace qr::text
