#include "qr/text/porter_stemmer.hpp"

#include <algorithm>
#include <array>
#include <span>

namespace qr::text {
namespace {

bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// 'y' is a consonant at the start of a word or after a vowel, a vowel after a consonant.
bool is_consonant(std::string_view w, std::size_t i) {
  if (is_vowel_letter(w[i])) return false;
  if (w[i] != 'y') return true;
  return i == 0 ? true : !is_consonant(w, i - 1);
}

// m in [C](VC){m}[V].
int measure(std::string_view stem) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < stem.size(); ++i) {
    const bool consonant = is_consonant(stem, i);
    if (consonant && prev_vowel) ++m;
    prev_vowel = !consonant;
  }
  return m;
}

bool contains_vowel(std::string_view stem) {
  for (std::size_t i = 0; i < stem.size(); ++i) {
    if (!is_consonant(stem, i)) return true;
  }
  return false;
}

bool ends_double_consonant(std::string_view w) {
  const auto n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends consonant-vowel-consonant, final consonant not w, x or y.
bool ends_cvc(std::string_view w) {
  const auto n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
  const char last = w[n - 1];
  return last != 'w' && last != 'x' && last != 'y';
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
  int min_measure;  // stem must have measure strictly greater than this
};

// The first rule whose suffix matches decides the outcome, whether or not its
// condition holds.
std::string apply_rules(const std::string& word, std::span<const Rule> rules) {
  for (const Rule& rule : rules) {
    if (!ends_with(word, rule.suffix)) continue;
    const std::string_view stem = std::string_view(word).substr(0, word.size() - rule.suffix.size());
    if (measure(stem) > rule.min_measure) return std::string(stem) + std::string(rule.replacement);
    return word;
  }
  return word;
}

std::string step1a(const std::string& w) {
  if (ends_with(w, "sses")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ies")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ss")) return w;
  if (ends_with(w, "s")) return w.substr(0, w.size() - 1);
  return w;
}

std::string step1b(const std::string& w) {
  if (ends_with(w, "eed")) {
    const std::string_view stem = std::string_view(w).substr(0, w.size() - 3);
    return measure(stem) > 0 ? std::string(stem) + "ee" : w;
  }
  std::string stem;
  bool stripped = false;
  for (std::string_view suffix : {std::string_view("ed"), std::string_view("ing")}) {
    if (ends_with(w, suffix)) {
      std::string_view candidate = std::string_view(w).substr(0, w.size() - suffix.size());
      if (contains_vowel(candidate)) {
        stem = std::string(candidate);
        stripped = true;
        break;
      }
    }
  }
  if (!stripped) return w;

  if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
  if (ends_double_consonant(stem)) {
    const char last = stem.back();
    if (last != 'l' && last != 's' && last != 'z') stem.pop_back();
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
  return stem;
}

std::string step1c(const std::string& w) {
  if (ends_with(w, "y") && contains_vowel(std::string_view(w).substr(0, w.size() - 1))) {
    return w.substr(0, w.size() - 1) + "i";
  }
  return w;
}

constexpr std::array<Rule, 20> kStep2 = {{
    {"ational", "ate", 0}, {"tional", "tion", 0}, {"enci", "ence", 0},  {"anci", "ance", 0},
    {"izer", "ize", 0},    {"abli", "able", 0},   {"alli", "al", 0},    {"entli", "ent", 0},
    {"eli", "e", 0},       {"ousli", "ous", 0},   {"ization", "ize", 0}, {"ation", "ate", 0},
    {"ator", "ate", 0},    {"alism", "al", 0},    {"iveness", "ive", 0}, {"fulness", "ful", 0},
    {"ousness", "ous", 0}, {"aliti", "al", 0},    {"iviti", "ive", 0},  {"biliti", "ble", 0},
}};

constexpr std::array<Rule, 7> kStep3 = {{
    {"icate", "ic", 0}, {"ative", "", 0}, {"alize", "al", 0}, {"iciti", "ic", 0},
    {"ical", "ic", 0},  {"ful", "", 0},   {"ness", "", 0},
}};

std::string step4(const std::string& w) {
  static constexpr std::array<std::string_view, 19> kSuffixes = {
      "al",   "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
      "ent",  "ion",  "ou",   "ism", "ate", "iti", "ous", "ive", "ize"};
  for (std::string_view suffix : kSuffixes) {
    if (!ends_with(w, suffix)) continue;
    const std::string_view stem = std::string_view(w).substr(0, w.size() - suffix.size());
    bool ok = measure(stem) > 1;
    if (suffix == "ion") ok = ok && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
    return ok ? std::string(stem) : w;
  }
  return w;
}

std::string step5a(const std::string& w) {
  if (!ends_with(w, "e")) return w;
  const std::string_view stem = std::string_view(w).substr(0, w.size() - 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) return std::string(stem);
  return w;
}

std::string step5b(const std::string& w) {
  if (ends_with(w, "ll") && measure(std::string_view(w).substr(0, w.size() - 1)) > 1) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

}  // namespace

std::string porter_stem(std::string_view word) {
  if (word.empty() || !std::all_of(word.begin(), word.end(), [](char c) { return c >= 'a' && c <= 'z'; })) {
    return std::string(word);
  }
  std::string w(word);
  w = step1a(w);
  w = step1b(w);
  w = step1c(w);
  w = apply_rules(w, kStep2);
  w = apply_rules(w, kStep3);
  w = step4(w);
  w = step5a(w);
  w = step5b(w);
  if (w.empty()) return std::string(word);
  return w;
}

}  // namespace qr::text
