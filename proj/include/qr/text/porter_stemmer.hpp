#pragma once

#include <string>
#include <string_view>

namespace qr::text {

/// Porter (1980) suffix-stripping stemmer, original rule set.
///
/// Expects a lowercase ASCII word. Tokens containing anything other than
/// a-z are returned unchanged, as is any word the rules would reduce to
/// the empty string (a bare "s").
std::string porter_stem(std::string_view word);

}  // namespace qr::text
