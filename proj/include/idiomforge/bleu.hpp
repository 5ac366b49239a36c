#pragma once

// Self-contained BLEU-4 ("bleu4-internal"): clipped n-gram precision
// pooled over the corpus, brevity penalty, add-half smoothing for zero
// higher-order matches. Not sacreBLEU-compatible by design.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "idiomforge/core.hpp"
#include "idiomforge/unicode.hpp"

namespace idiomforge {

inline constexpr std::string_view kBleuLabel = "bleu4-internal";
inline constexpr int kBleuOrder = 4;

using Tokens = std::vector<std::string>;

/// Space-delimited languages: lowercase, split on white space, punctuation
/// and symbols become their own tokens. Others: one token per scalar value,
/// white space dropped.
inline Tokens tokenize(std::string_view text, const LanguageCode& lang) {
  Tokens out;
  const auto cps = unicode::decode_utf8(text);
  if (!lang.space_delimited()) {
    for (char32_t c : cps) {
      if (unicode::is_white_space(c)) continue;
      out.push_back(unicode::encode_utf8(std::u32string_view(&c, 1)));
    }
    return out;
  }
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char32_t c : cps) {
    if (unicode::is_white_space(c)) {
      flush();
    } else if (unicode::is_punct_or_symbol(c)) {
      flush();
      unicode::append_utf8(word, c);
      flush();
    } else {
      unicode::append_utf8(word, unicode::to_lower(c));
    }
  }
  flush();
  return out;
}

struct BleuScore {
  double score = 0;
  std::array<double, kBleuOrder> precisions{};  // after smoothing
  double brevity_penalty = 0;
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;
  std::array<std::size_t, kBleuOrder> matches{};
  std::array<std::size_t, kBleuOrder> totals{};
};

namespace detail {

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(const Tokens& tokens,
                                                                         std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[gram];
  }
  return counts;
}

}  // namespace detail

/// An order with no candidate n-grams at all (every candidate shorter than
/// n) has precision 1 and does not penalize; an empty candidate side scores 0.
inline BleuScore corpus_bleu(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  if (candidates.empty()) throw InvalidArgument("BLEU needs at least one candidate");
  if (candidates.size() != references.size()) {
    throw InvalidArgument("BLEU needs as many references as candidates");
  }
  BleuScore s;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto& ref = references[i];
    s.candidate_len += cand.size();
    s.reference_len += ref.size();
    for (std::size_t n = 1; n <= kBleuOrder; ++n) {
      if (cand.size() < n) continue;
      s.totals[n - 1] += cand.size() - n + 1;
      auto ref_counts = detail::ngram_counts(ref, n);
      for (const auto& [gram, count] : detail::ngram_counts(cand, n)) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) s.matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  if (s.candidate_len == 0) {
    s.brevity_penalty = 0;
    return s;
  }
  s.brevity_penalty = s.candidate_len < s.reference_len
                          ? std::exp(1.0 - static_cast<double>(s.reference_len) /
                                               static_cast<double>(s.candidate_len))
                          : 1.0;
  double log_sum = 0;
  bool zero = false;
  for (std::size_t k = 0; k < kBleuOrder; ++k) {
    double p;
    if (s.totals[k] == 0) {
      p = 1.0;
    } else if (s.matches[k] == 0) {
      p = k == 0 ? 0.0 : 1.0 / (2.0 * static_cast<double>(s.totals[k]));
    } else {
      p = static_cast<double>(s.matches[k]) / static_cast<double>(s.totals[k]);
    }
    s.precisions[k] = p;
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }
  s.score = zero ? 0.0 : 100.0 * s.brevity_penalty * std::exp(log_sum / kBleuOrder);
  s.score = std::clamp(s.score, 0.0, 100.0);
  return s;
}

inline BleuScore sentence_bleu(const Tokens& candidate, const Tokens& reference) {
  return corpus_bleu(std::span<const Tokens>(&candidate, 1), std::span<const Tokens>(&reference, 1));
}

}  // namespace idiomforge
