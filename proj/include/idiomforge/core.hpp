#pragma once

// Shared domain types: languages, KB entries, matches, prompts, records.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <compare>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "idiomforge/error.hpp"
#include "idiomforge/unicode.hpp"

namespace idiomforge {

struct LanguageInfo {
  std::string code;  // canonical, e.g. "En"
  std::string english_name;
  /// Words are separated by spaces (affects normalization, matching, BLEU).
  bool space_delimited = false;
  /// Name of this language as written in a prompt of another language,
  /// keyed by that prompt language's canonical code.
  std::map<std::string, std::string> localized_names;
};

/// Process-wide table of known languages. Seeded with En/Zh/Ja; config may
/// register more before any pipeline work starts.
class LanguageRegistry {
 public:
  static LanguageRegistry& instance() {
    static LanguageRegistry registry;
    return registry;
  }

  static std::string canonical(std::string_view code) {
    std::string out(code);
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto c = static_cast<unsigned char>(out[i]);
      out[i] = static_cast<char>(i == 0 ? std::toupper(c) : std::tolower(c));
    }
    return out;
  }

  void add(LanguageInfo info) {
    if (info.code.empty()) throw InvalidArgument("language code is empty");
    for (char c : info.code) {
      if (!std::isalpha(static_cast<unsigned char>(c)) && c != '-') {
        throw InvalidArgument("language code must be alphabetic: " + info.code);
      }
    }
    info.code = canonical(info.code);
    std::unique_lock lock(mutex_);
    languages_[info.code] = std::move(info);
  }

  /// Every name any language is known by, in any prompt language.
  std::vector<std::string> all_names() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [code, info] : languages_) {
      out.push_back(info.english_name);
      for (const auto& [prompt_lang, name] : info.localized_names) out.push_back(name);
    }
    return out;
  }

  std::optional<LanguageInfo> find(std::string_view code) const {
    std::shared_lock lock(mutex_);
    auto it = languages_.find(canonical(code));
    if (it == languages_.end()) return std::nullopt;
    return it->second;
  }

 private:
  LanguageRegistry() {
    languages_["En"] = {"En", "English", true,
                        {{"Zh", "英文"}, {"Ja", "英語"}}};
    languages_["Zh"] = {"Zh", "Chinese", false,
                        {{"Zh", "中文"}, {"Ja", "中国語"}}};
    languages_["Ja"] = {"Ja", "Japanese", false,
                        {{"Zh", "日文"}, {"Ja", "日本語"}}};
  }

  mutable std::shared_mutex mutex_;
  std::map<std::string, LanguageInfo> languages_;
};

class LanguageCode {
 public:
  /// Case-insensitive; unknown codes are rejected.
  static LanguageCode parse(std::string_view text) {
    auto info = LanguageRegistry::instance().find(text);
    if (!info) throw ParseError("unknown language code '" + std::string(text) + "'");
    return LanguageCode(info->code);
  }

  static LanguageCode En() { return LanguageCode("En"); }
  static LanguageCode Zh() { return LanguageCode("Zh"); }
  static LanguageCode Ja() { return LanguageCode("Ja"); }

  const std::string& code() const noexcept { return code_; }

  LanguageInfo info() const {
    auto found = LanguageRegistry::instance().find(code_);
    if (!found) throw Error("language " + code_ + " vanished from registry");
    return *found;
  }

  std::string english_name() const { return info().english_name; }

  /// Name of this language as it should appear in a prompt written in
  /// `prompt_lang`.
  std::string name_in(const LanguageCode& prompt_lang) const {
    auto i = info();
    auto it = i.localized_names.find(prompt_lang.code());
    return it == i.localized_names.end() ? i.english_name : it->second;
  }

  bool space_delimited() const { return info().space_delimited; }

  friend auto operator<=>(const LanguageCode&, const LanguageCode&) = default;

 private:
  explicit LanguageCode(std::string code) : code_(std::move(code)) {}
  std::string code_;
};

struct LanguagePair {
  LanguageCode source;
  LanguageCode target;

  std::string label() const { return source.code() + "->" + target.code(); }

  static LanguagePair parse(std::string_view text) {
    auto pos = text.find("->");
    std::size_t sep_len = 2;
    if (pos == std::string_view::npos) {
      pos = text.find('-');
      sep_len = 1;
    }
    if (pos == std::string_view::npos) {
      throw ParseError("language pair must look like Zh->En: " + std::string(text));
    }
    return {LanguageCode::parse(text.substr(0, pos)),
            LanguageCode::parse(text.substr(pos + sep_len))};
  }

  friend auto operator<=>(const LanguagePair&, const LanguagePair&) = default;
};

// ---------------------------------------------------------------------------
// Timestamps (RFC 3339, UTC, second precision)

using Timestamp = std::chrono::sys_seconds;

inline std::string format_rfc3339(Timestamp t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day ymd{day};
  std::chrono::hh_mm_ss hms{t - day};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z",
                     static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

inline Timestamp parse_rfc3339(std::string_view text) {
  int y, mo, d, h, mi, s;
  char tail = 0;
  std::string buf(text);
  if (buf.size() != 20 ||
      std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h,
                  &mi, &s, &tail) != 7 ||
      tail != 'Z') {
    throw ParseError("timestamp must be RFC 3339 UTC (YYYY-MM-DDTHH:MM:SSZ): " + buf);
  }
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{static_cast<unsigned>(mo)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw ParseError("timestamp out of range: " + buf);
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} +
         std::chrono::minutes{mi} + std::chrono::seconds{s};
}

inline Timestamp now_utc() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

// ---------------------------------------------------------------------------
// Knowledge-base entry

struct KBKey {
  std::string idiom;
  LanguageCode idiom_lang;
  LanguageCode meaning_lang;
  std::string source_model;

  friend auto operator<=>(const KBKey&, const KBKey&) = default;
};

struct KBEntry {
  std::string idiom;
  LanguageCode idiom_lang;
  LanguageCode meaning_lang;
  std::string meaning;
  std::string source_model;
  Timestamp created_at{};

  KBKey key() const { return {idiom, idiom_lang, meaning_lang, source_model}; }

  /// Throws InvalidArgument when an invariant is violated. Normalization of
  /// `idiom` is checked by the store, which owns the normalizer.
  void validate() const {
    if (idiom.empty()) throw InvalidArgument("KB entry has empty idiom");
    if (meaning.empty()) throw InvalidArgument("KB entry for '" + idiom + "' has empty meaning");
    if (meaning.find_first_of("\r\n") != std::string::npos) {
      throw InvalidArgument("KB entry for '" + idiom + "' has a multi-line meaning");
    }
    if (source_model.empty()) {
      throw InvalidArgument("KB entry for '" + idiom + "' has empty source_model");
    }
    if (!unicode::is_valid_utf8(idiom) || !unicode::is_valid_utf8(meaning)) {
      throw InvalidArgument("KB entry is not valid UTF-8");
    }
  }

  friend bool operator==(const KBEntry&, const KBEntry&) = default;
};

// ---------------------------------------------------------------------------
// Matches, prompts, records

enum class Provenance { Gold, Detected };

inline std::string_view to_string(Provenance p) {
  return p == Provenance::Gold ? "gold" : "detected";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "gold") return Provenance::Gold;
  if (s == "detected") return Provenance::Detected;
  throw ParseError("unknown provenance '" + std::string(s) + "'");
}

struct IdiomMatch {
  std::string idiom;
  std::size_t start = 0;  // scalar values, inclusive
  std::size_t end = 0;    // scalar values, exclusive
  Provenance provenance = Provenance::Detected;

  std::size_t length() const { return end - start; }

  friend bool operator==(const IdiomMatch&, const IdiomMatch&) = default;
};

enum class PromptMode { Direct, KBCoT, SelfCoT, MeaningDistill, Judge };

inline std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::Direct: return "direct";
    case PromptMode::KBCoT: return "kb-cot";
    case PromptMode::SelfCoT: return "self-cot";
    case PromptMode::MeaningDistill: return "meaning-distill";
    case PromptMode::Judge: return "judge";
  }
  return "?";
}

inline PromptMode parse_prompt_mode(std::string_view s) {
  for (auto m : {PromptMode::Direct, PromptMode::KBCoT, PromptMode::SelfCoT,
                 PromptMode::MeaningDistill, PromptMode::Judge}) {
    if (to_string(m) == s) return m;
  }
  throw ParseError("unknown mode '" + std::string(s) + "'");
}

inline constexpr double kGenerationTemperature = 0.7;
inline constexpr double kJudgeTemperature = 0.1;

inline double default_temperature(PromptMode m) {
  return m == PromptMode::Judge ? kJudgeTemperature : kGenerationTemperature;
}

struct PromptSpec {
  std::string text;
  PromptMode mode = PromptMode::Direct;
  LanguageCode prompt_lang = LanguageCode::En();
  std::optional<LanguageCode> meaning_lang;
  double temperature = kGenerationTemperature;
  int max_tokens = 256;

  void validate() const {
    if (text.empty()) throw InvalidArgument("prompt text is empty");
    if (mode == PromptMode::Direct && meaning_lang) {
      throw InvalidArgument("direct prompts carry no meaning language");
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
      throw InvalidArgument("temperature must lie in [0,2]");
    }
    if (max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
  }
};

struct TranslationRecord {
  std::string id;
  LanguageCode source_lang = LanguageCode::Zh();
  LanguageCode target_lang = LanguageCode::En();
  std::string source_text;
  std::string idiom;
  PromptMode mode = PromptMode::Direct;
  std::optional<std::string> meaning_used;
  std::optional<std::string> meaning_source_model;
  std::string translation;
  std::string translator_model;
  /// Record-level failure; translation is empty when set.
  std::optional<std::string> error;

  friend bool operator==(const TranslationRecord&, const TranslationRecord&) = default;
};

/// A point on the 1-3 idiom-translation rubric. Construction is the only
/// way in, so no other value can be stored.
class RubricScore {
 public:
  explicit RubricScore(long long v) : value_(static_cast<int>(v)) {
    if (v < 1 || v > 3) throw InvalidArgument("score out of range");
  }
  int value() const noexcept { return value_; }
  friend auto operator<=>(const RubricScore&, const RubricScore&) = default;

 private:
  int value_;
};

struct EvalRecord {
  std::string record_id;
  std::optional<LanguagePair> pair;
  std::optional<RubricScore> judge_score;
  std::optional<RubricScore> human_score;
  std::optional<double> bleu_sentence;
  std::optional<std::string> error;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

}  // namespace idiomforge
