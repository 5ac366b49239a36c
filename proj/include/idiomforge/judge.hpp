#pragma once

// Rubric-based LLM judging of idiom translations (1-3 points, score only).

#include <cctype>
#include <limits>
#include <string>
#include <vector>

#include "idiomforge/core.hpp"
#include "idiomforge/jsonl.hpp"
#include "idiomforge/parallel.hpp"
#include "idiomforge/prompt_template.hpp"
#include "idiomforge/provider.hpp"

namespace idiomforge::judge {

class ScoreError : public ParseError {
 public:
  enum class Kind { Unparseable, OutOfRange };

  explicit ScoreError(Kind kind)
      : ParseError(kind == Kind::Unparseable ? "unparseable score" : "score out of range"),
        kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// A scored demonstration for few-shot judging.
struct JudgeExample {
  std::string source_text;
  std::string idiom;
  std::string translation;
  RubricScore score;
};

/// JSONL of {"source_text","idiom","translation","score"}.
inline std::vector<JudgeExample> load_judge_examples(const std::filesystem::path& path) {
  std::vector<JudgeExample> out;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    auto score = jsonl::optional_integer(obj, "score");
    if (!score) throw ParseError("missing field \"score\"");
    out.push_back({jsonl::require_string(obj, "source_text"), jsonl::require_string(obj, "idiom"),
                   jsonl::require_string(obj, "translation"), RubricScore(*score)});
  });
  return out;
}

struct JudgeConfig {
  std::string judge_model;
  double temperature = kJudgeTemperature;
  int shots = 0;
  std::vector<JudgeExample> examples;
  int max_tokens = 16;
  prompts::TemplateSet templates = prompts::TemplateSet::builtin();
};

inline PromptSpec build_judge_prompt(const std::string& source_text, const std::string& idiom,
                                     const std::string& translation,
                                     const LanguageCode& source_lang,
                                     const LanguageCode& target_lang, const JudgeConfig& config) {
  if (source_text.empty() || idiom.empty() || translation.empty()) {
    throw InvalidArgument("judge prompt needs non-empty source, idiom and translation");
  }
  if (config.shots < 0 || static_cast<std::size_t>(config.shots) > config.examples.size()) {
    throw InvalidArgument("requested " + std::to_string(config.shots) + " shots but " +
                          std::to_string(config.examples.size()) + " examples are configured");
  }
  const auto prompt_lang = LanguageCode::En();
  prompts::Values base;
  prompts::add_language(base, "source_lang", source_lang, prompt_lang);
  prompts::add_language(base, "target_lang", target_lang, prompt_lang);

  std::string examples;
  for (int i = 0; i < config.shots; ++i) {
    const auto& ex = config.examples[static_cast<std::size_t>(i)];
    auto v = base;
    v["source_text"] = ex.source_text;
    v["idiom"] = ex.idiom;
    v["translation"] = ex.translation;
    v["score"] = std::to_string(ex.score.value());
    examples += prompts::render(config.templates.get(prompts::Kind::JudgeExample, prompt_lang), v);
  }

  auto v = base;
  v["source_text"] = source_text;
  v["idiom"] = idiom;
  v["translation"] = translation;
  v["examples"] = std::move(examples);

  PromptSpec spec;
  spec.text = prompts::render(config.templates.get(prompts::Kind::Judge, prompt_lang), v);
  spec.mode = PromptMode::Judge;
  spec.prompt_lang = prompt_lang;
  spec.temperature = config.temperature;
  spec.max_tokens = config.max_tokens;
  spec.validate();
  return spec;
}

/// The first standalone integer in the response (a digit run not glued to
/// letters or digits and not part of a decimal), optionally signed.
inline RubricScore parse_score(std::string_view response) {
  auto is_alnum = [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  const std::size_t n = response.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_digit(response[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    std::size_t end = i;
    while (end < n && is_digit(response[end])) ++end;
    i = end;

    bool glued_left = start > 0 && (is_alnum(response[start - 1]) ||
                                    (response[start - 1] == '.' && start > 1 &&
                                     is_digit(response[start - 2])));
    bool glued_right = end < n && is_alnum(response[end]);
    bool decimal = end + 1 < n && response[end] == '.' && is_digit(response[end + 1]);
    if (glued_left || glued_right) continue;
    if (decimal) {
      // Skip the fractional part too.
      i = end + 1;
      while (i < n && is_digit(response[i])) ++i;
      continue;
    }

    bool negative = false;
    if (start > 0 && (response[start - 1] == '-' || response[start - 1] == '+')) {
      bool sign_free = start < 2 || !is_alnum(response[start - 2]);
      negative = sign_free && response[start - 1] == '-';
    }
    if (end - start > 3) throw ScoreError(ScoreError::Kind::OutOfRange);
    long long value = 0;
    for (std::size_t k = start; k < end; ++k) value = value * 10 + (response[k] - '0');
    if (negative) value = -value;
    if (value < 1 || value > 3) throw ScoreError(ScoreError::Kind::OutOfRange);
    return RubricScore(value);
  }
  throw ScoreError(ScoreError::Kind::Unparseable);
}

/// One EvalRecord per input, in input order. Translation failures and
/// judge failures are recorded in `error`; the batch always completes.
inline std::vector<EvalRecord> judge_batch(const std::vector<TranslationRecord>& records,
                                           const JudgeConfig& config, Provider& provider,
                                           int parallelism = 4) {
  if (config.judge_model.empty()) throw InvalidArgument("judge model is not set");
  return parallel_map(records, parallelism, [&](const TranslationRecord& rec, std::size_t) {
    EvalRecord out;
    out.record_id = rec.id;
    out.pair = LanguagePair{rec.source_lang, rec.target_lang};
    if (rec.error) {
      out.error = "translation failed: " + *rec.error;
      return out;
    }
    try {
      auto spec = build_judge_prompt(rec.source_text, rec.idiom, rec.translation, rec.source_lang,
                                     rec.target_lang, config);
      auto response = provider.complete(
          {spec.text, spec.temperature, spec.max_tokens, config.judge_model, std::nullopt});
      out.judge_score = parse_score(response.text);
    } catch (const Error& e) {
      out.error = e.what();
    }
    return out;
  });
}

}  // namespace idiomforge::judge
