#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qr::text {

/// Splits text into lowercase tokens.
///
/// Whitespace (ASCII plus U+00A0) separates chunks. Leading and trailing
/// punctuation of a chunk is dropped; inside a chunk, runs of punctuation
/// become their own tokens ("don't" -> don ' t). A chunk made only of
/// punctuation is kept whole. Bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// tokenize() followed by Porter stemming of every token.
std::vector<std::string> analyze(std::string_view text);

}  // namespace qr::text
