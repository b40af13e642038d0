#include "qr/text/tokenizer.hpp"

#include "qr/text/porter_stemmer.hpp"

namespace qr::text {
namespace {

bool is_punct(unsigned char c) {
  return c < 0x80 && ((c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
                      (c >= 0x7b && c <= 0x7e));
}

bool is_ascii_space(unsigned char c) { return c == ' ' || (c >= 0x09 && c <= 0x0d); }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && is_punct(static_cast<unsigned char>(chunk[begin]))) ++begin;
  while (end > begin && is_punct(static_cast<unsigned char>(chunk[end - 1]))) --end;
  if (begin == end) {
    out.emplace_back(chunk);
    return;
  }
  std::size_t i = begin;
  while (i < end) {
    const bool punct = is_punct(static_cast<unsigned char>(chunk[i]));
    std::size_t j = i;
    while (j < end && is_punct(static_cast<unsigned char>(chunk[j])) == punct) ++j;
    std::string token;
    token.reserve(j - i);
    for (std::size_t k = i; k < j; ++k) token.push_back(lower(chunk[k]));
    out.push_back(std::move(token));
    i = j;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto space_width = [&](std::size_t pos) -> std::size_t {
    const auto c = static_cast<unsigned char>(text[pos]);
    if (is_ascii_space(c)) return 1;
    if (c == 0xc2 && pos + 1 < n && static_cast<unsigned char>(text[pos + 1]) == 0xa0) return 2;
    return 0;
  };
  while (i < n) {
    if (const auto w = space_width(i); w > 0) {
      i += w;
      continue;
    }
    std::size_t j = i;
    while (j < n && space_width(j) == 0) ++j;
    split_chunk(text.substr(i, j - i), out);
    i = j;
  }
  return out;
}

std::vector<std::string> analyze(std::string_view text) {
  auto tokens = tokenize(text);
  for (auto& token : tokens) token = porter_stem(token);
  return tokens;
}

}  // namespace qr::text
