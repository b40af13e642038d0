#include "qr/autoencoder/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::ae {
namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_integer(std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_double(std::string_view s, const std::filesystem::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(fmt::format("{}:{}: bad number '{}'", path.string(), line_no, s));
  }
  return v;
}

}  // namespace

PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path, const text::Vocabulary& vocab,
                                                std::size_t dim, kernel::Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  PretrainedEmbeddings out;
  out.table = kernel::uniform_init(vocab.size(), dim, -kernel::kUniformInitBound, kernel::kUniformInitBound, rng);
  for (auto& v : out.table.row(text::Vocabulary::kPad)) v = 0.0;

  std::vector<std::uint8_t> filled(vocab.size(), 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;
    if (fields.size() - 1 != dim) {
      throw Error(fmt::format("{}:{}: vector has {} values, expected {}", path.string(), line_no, fields.size() - 1,
                              dim));
    }
    ++out.file_words;
    const std::string_view word = fields[0];
    if (!vocab.contains(word)) continue;
    const auto id = vocab.id(word);
    auto row = out.table.row(id);
    for (std::size_t j = 0; j < dim; ++j) row[j] = parse_double(fields[j + 1], path, line_no);
    if (filled[id] == 0) {
      filled[id] = 1;
      ++out.covered;
    }
  }
  return out;
}

}  // namespace qr::ae
