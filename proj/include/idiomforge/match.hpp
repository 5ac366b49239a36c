#pragma once

// Locating idioms in sentences: gold pairing, or detection against a
// lexicon compiled into an Aho-Corasick automaton.
//
// Space-delimited languages (English) match case-insensitively and only
// between non-letters or string edges; everything else is exact substring.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idiomforge/aho_corasick.hpp"
#include "idiomforge/core.hpp"
#include "idiomforge/ingest.hpp"
#include "idiomforge/unicode.hpp"

namespace idiomforge {

class Lexicon {
 public:
  static Lexicon build(const ingest::IdiomSet& idioms) {
    if (idioms.empty()) throw InvalidArgument("cannot build a lexicon from an empty idiom set");
    Lexicon lex(idioms.lang());
    for (const auto& idiom : idioms.idioms()) {
      auto key = lex.fold(unicode::decode_utf8(idiom));
      auto index = lex.automaton_.add(key);
      if (index == lex.patterns_.size()) lex.patterns_.push_back(idiom);
    }
    lex.automaton_.build();
    return lex;
  }

  const LanguageCode& lang() const noexcept { return lang_; }
  const std::vector<std::string>& patterns() const noexcept { return patterns_; }
  const AhoCorasick& automaton() const noexcept { return automaton_; }
  bool case_insensitive() const noexcept { return word_bounded_; }

  bool contains(const std::string& idiom) const {
    return automaton_.contains(fold(unicode::decode_utf8(idiom)));
  }

  std::u32string fold(std::u32string text) const {
    return word_bounded_ ? unicode::to_lower(text) : text;
  }

 private:
  explicit Lexicon(LanguageCode lang)
      : lang_(std::move(lang)), word_bounded_(lang_.space_delimited()) {}

  LanguageCode lang_;
  bool word_bounded_;
  std::vector<std::string> patterns_;
  AhoCorasick automaton_;
};

namespace detail {

inline bool bounded(std::u32string_view text, std::size_t start, std::size_t end) {
  bool left = start == 0 || !unicode::is_letter(text[start - 1]);
  bool right = end == text.size() || !unicode::is_letter(text[end]);
  return left && right;
}

inline void sort_matches(std::vector<IdiomMatch>& matches) {
  std::sort(matches.begin(), matches.end(), [](const IdiomMatch& a, const IdiomMatch& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end > b.end;
    return a.idiom < b.idiom;
  });
}

}  // namespace detail

/// All occurrences of all lexicon patterns, sorted by start then longest
/// first. Offsets count scalar values of `sentence`.
inline std::vector<IdiomMatch> find_idioms(std::string_view sentence, const Lexicon& lexicon) {
  std::vector<IdiomMatch> out;
  if (sentence.empty()) return out;
  const auto text = unicode::decode_utf8(sentence);
  const auto folded = lexicon.fold(text);
  for (const auto& hit : lexicon.automaton().search(folded)) {
    std::size_t len = lexicon.automaton().pattern_length(hit.pattern);
    std::size_t start = hit.end - len;
    if (lexicon.case_insensitive() && !detail::bounded(text, start, hit.end)) continue;
    out.push_back({lexicon.patterns()[hit.pattern], start, hit.end, Provenance::Detected});
  }
  detail::sort_matches(out);
  return out;
}

/// Leftmost-longest: earliest start, and the longest match among those.
inline std::optional<IdiomMatch> select_primary(std::span<const IdiomMatch> matches) {
  if (matches.empty()) return std::nullopt;
  const IdiomMatch* best = &matches.front();
  for (const auto& m : matches) {
    if (m.start < best->start ||
        (m.start == best->start &&
         (m.length() > best->length() || (m.length() == best->length() && m.idiom < best->idiom)))) {
      best = &m;
    }
  }
  return *best;
}

/// First occurrence of the dataset-provided idiom in its sentence. Both are
/// compared after NFC; offsets refer to the NFC form of `sentence`.
inline IdiomMatch pair_gold(std::string_view sentence, std::string_view gold_idiom) {
  const auto text = unicode::decode_utf8(unicode::nfc(sentence));
  const auto idiom = unicode::decode_utf8(unicode::nfc(gold_idiom));
  if (idiom.empty()) throw InvalidArgument("gold idiom is empty");
  auto pos = text.find(idiom);
  if (pos == std::u32string::npos) {
    throw InvalidArgument("gold idiom not found: '" + std::string(gold_idiom) + "'");
  }
  return {unicode::encode_utf8(idiom), pos, pos + idiom.size(), Provenance::Gold};
}

}  // namespace idiomforge
