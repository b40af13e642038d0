#include "qr/text/vocabulary.hpp"

#include <fstream>

#include <fmt/format.h>

#include "qr/error.hpp"
#include "qr/hash.hpp"

namespace qr::text {

Vocabulary::Vocabulary() {
  words_ = {std::string(kPadWord), std::string(kUnkWord)};
  counts_ = {0, 0};
}

Vocabulary Vocabulary::from_entries(std::vector<std::pair<std::string, std::uint64_t>> entries) {
  Vocabulary vocab;
  vocab.words_.reserve(entries.size() + 2);
  vocab.counts_.reserve(entries.size() + 2);
  for (auto& [word, count] : entries) {
    if (word.empty()) throw Error("vocabulary: empty word");
    if (word == kPadWord || word == kUnkWord) throw Error(fmt::format("vocabulary: reserved word '{}'", word));
    const auto id = static_cast<TokenId>(vocab.words_.size());
    if (!vocab.index_.emplace(word, id).second) throw Error(fmt::format("vocabulary: duplicate word '{}'", word));
    vocab.words_.push_back(std::move(word));
    vocab.counts_.push_back(count);
  }
  return vocab;
}

TokenId Vocabulary::id(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.contains(std::string(word)); }

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) throw Error(fmt::format("vocabulary: id {} out of range {}", id, words_.size()));
  return words_[id];
}

std::uint64_t Vocabulary::hash() const {
  Fnv1a h;
  for (const auto& w : words_) {
    h.update(w);
    h.update("\n");
  }
  return h.value();
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (std::size_t i = 0; i < words_.size(); ++i) out << words_[i] << '\t' << counts_[i] << '\n';
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(fmt::format("{}:{}: expected word<TAB>count", path.string(), line_no));
    std::string word = line.substr(0, tab);
    std::uint64_t count = 0;
    try {
      count = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw Error(fmt::format("{}:{}: bad count", path.string(), line_no));
    }
    if (line_no == 1 && word != kPadWord) throw Error(fmt::format("{}: first entry must be {}", path.string(), kPadWord));
    if (line_no == 2 && word != kUnkWord) throw Error(fmt::format("{}: second entry must be {}", path.string(), kUnkWord));
    if (line_no > 2) entries.emplace_back(std::move(word), count);
  }
  if (line_no < 2) throw Error(fmt::format("{}: missing reserved entries", path.string()));
  return from_entries(std::move(entries));
}

}  // namespace qr::text
