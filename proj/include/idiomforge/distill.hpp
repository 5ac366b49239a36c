#pragma once

// Meaning distillation: few-shot prompt a provider for an idiom's
// figurative meaning and turn the answer into a KB entry.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "idiomforge/core.hpp"
#include "idiomforge/ingest.hpp"
#include "idiomforge/jsonl.hpp"
#include "idiomforge/kbstore.hpp"
#include "idiomforge/parallel.hpp"
#include "idiomforge/prompt_template.hpp"
#include "idiomforge/provider.hpp"

namespace idiomforge::distill {

struct Exemplar {
  std::string idiom;
  std::string meaning;
  LanguageCode idiom_lang;
  LanguageCode meaning_lang;
};

/// JSONL of {"idiom","meaning","idiom_lang","meaning_lang"}.
inline std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  std::vector<Exemplar> out;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    Exemplar e{jsonl::require_string(obj, "idiom"), jsonl::require_string(obj, "meaning"),
               LanguageCode::parse(jsonl::require_string(obj, "idiom_lang")),
               LanguageCode::parse(jsonl::require_string(obj, "meaning_lang"))};
    if (e.idiom.empty() || e.meaning.empty()) throw ParseError("exemplar fields must be non-empty");
    out.push_back(std::move(e));
  });
  return out;
}

struct DistillConfig {
  std::vector<Exemplar> exemplars;
  LanguageCode meaning_lang = LanguageCode::En();
  std::string model;
  double temperature = kGenerationTemperature;
  std::size_t max_meaning_chars = 200;
  int max_tokens = 256;
  bool zero_shot = false;
  prompts::TemplateSet templates = prompts::TemplateSet::builtin();
};

inline PromptSpec build_meaning_prompt(const std::string& idiom, const LanguageCode& idiom_lang,
                                       const DistillConfig& config) {
  if (idiom.empty()) throw InvalidArgument("idiom is empty");
  if (config.exemplars.empty() && !config.zero_shot) {
    throw InvalidArgument("no exemplars configured (use --zero-shot to allow zero-shot prompts)");
  }
  const auto prompt_lang = LanguageCode::En();
  prompts::Values values;
  prompts::add_language(values, "idiom_lang", idiom_lang, prompt_lang);
  prompts::add_language(values, "meaning_lang", config.meaning_lang, prompt_lang);

  std::string cases;
  std::size_t number = 1;
  for (const auto& ex : config.exemplars) {
    if (ex.idiom_lang != idiom_lang || ex.meaning_lang != config.meaning_lang) {
      throw InvalidArgument("exemplar '" + ex.idiom + "' is " + ex.idiom_lang.code() + "->" +
                            ex.meaning_lang.code() + ", prompt needs " + idiom_lang.code() +
                            "->" + config.meaning_lang.code());
    }
    auto v = values;
    v["number"] = std::to_string(number++);
    v["idiom"] = ex.idiom;
    v["meaning"] = ex.meaning;
    cases += prompts::render(config.templates.get(prompts::Kind::MeaningDistillCase, prompt_lang), v);
    cases += '\n';
  }
  auto v = values;
  v["number"] = std::to_string(number);
  v["idiom"] = idiom;
  cases += prompts::render(config.templates.get(prompts::Kind::MeaningDistillQuery, prompt_lang), v);
  values["cases"] = std::move(cases);

  PromptSpec spec;
  spec.text = prompts::render(config.templates.get(prompts::Kind::MeaningDistill, prompt_lang), values);
  spec.mode = PromptMode::MeaningDistill;
  spec.prompt_lang = prompt_lang;
  spec.meaning_lang = config.meaning_lang;
  spec.temperature = config.temperature;
  spec.max_tokens = config.max_tokens;
  spec.validate();
  return spec;
}

/// The open label a completion is expected to follow: the prompt's last line.
inline std::string open_label(std::string_view prompt) {
  auto nl = prompt.rfind('\n');
  return unicode::trim(nl == std::string_view::npos ? prompt : prompt.substr(nl + 1));
}

namespace detail {

inline bool is_open_quote(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'“' || c == U'‘' || c == U'「' || c == U'『' ||
         c == U'”' || c == U'’';
}
inline bool is_close_quote(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'”' || c == U'’' || c == U'」' || c == U'』' ||
         c == U'“' || c == U'‘';
}

}  // namespace detail

/// Text after the last `label` (or the whole response), cut at the first
/// blank line, lines joined with spaces, trimmed, surrounding quotes
/// removed. Throws ParseError("empty meaning" / "meaning too long").
inline std::string parse_meaning(std::string_view response, std::string_view label,
                                 std::size_t max_chars) {
  std::string_view body = response;
  if (!label.empty()) {
    auto pos = body.rfind(label);
    if (pos != std::string_view::npos) body = body.substr(pos + label.size());
  }
  auto cps = unicode::decode_utf8(body);
  std::u32string_view rest = unicode::trim(std::u32string_view(cps));

  std::u32string joined;
  while (!rest.empty()) {
    auto nl = rest.find(U'\n');
    auto line = unicode::trim(rest.substr(0, nl));
    if (line.empty()) break;
    if (!joined.empty()) joined.push_back(U' ');
    joined.append(line);
    if (nl == std::u32string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }

  std::u32string_view meaning(joined);
  while (meaning.size() >= 2 && detail::is_open_quote(meaning.front()) &&
         detail::is_close_quote(meaning.back())) {
    meaning = unicode::trim(meaning.substr(1, meaning.size() - 2));
  }
  if (meaning.empty()) throw ParseError("empty meaning");
  if (meaning.size() > max_chars) throw ParseError("meaning too long");
  return unicode::encode_utf8(meaning);
}

inline std::string meaning_label(const DistillConfig& config) {
  const auto prompt_lang = LanguageCode::En();
  prompts::Values v;
  prompts::add_language(v, "idiom_lang", config.meaning_lang, prompt_lang);
  prompts::add_language(v, "meaning_lang", config.meaning_lang, prompt_lang);
  v["number"] = "1";
  v["idiom"] = "_";
  return open_label(
      prompts::render(config.templates.get(prompts::Kind::MeaningDistillQuery, prompt_lang), v));
}

inline std::string parse_meaning(std::string_view response, const DistillConfig& config) {
  return parse_meaning(response, meaning_label(config), config.max_meaning_chars);
}

struct Failure {
  std::string idiom;
  std::string reason;
  friend bool operator==(const Failure&, const Failure&) = default;
};

struct DistillReport {
  std::size_t generated = 0;
  std::size_t skipped_existing = 0;
  std::size_t failed = 0;
  std::vector<Failure> failures;  // sorted by idiom
};

struct BatchOptions {
  bool refresh = false;
  int parallelism = 4;
  Timestamp created_at = now_utc();
};

/// Fills in meanings for every idiom that has no entry under
/// (idiom, lang, meaning_lang, model). A failing idiom is reported, never
/// fatal to the batch.
inline DistillReport distill_batch(const ingest::IdiomSet& idioms, const DistillConfig& config,
                                   Provider& provider, KnowledgeBase& kb,
                                   const BatchOptions& options = {}) {
  DistillReport report;
  std::vector<std::string> todo;
  for (const auto& idiom : idioms.idioms()) {
    if (!options.refresh && kb.find({idiom, idioms.lang(), config.meaning_lang, config.model})) {
      ++report.skipped_existing;
    } else {
      todo.push_back(idiom);
    }
  }

  struct Outcome {
    std::optional<std::string> meaning;
    std::string error;
  };
  auto outcomes = parallel_map(todo, options.parallelism, [&](const std::string& idiom, std::size_t) {
    Outcome out;
    try {
      auto spec = build_meaning_prompt(idiom, idioms.lang(), config);
      CompletionRequest request{spec.text, spec.temperature, spec.max_tokens, config.model, {}};
      auto response = provider.complete(request);
      out.meaning = parse_meaning(response.text, open_label(spec.text), config.max_meaning_chars);
    } catch (const Error& e) {
      out.error = e.what();
    }
    return out;
  });

  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (outcomes[i].meaning) {
      kb.upsert({todo[i], idioms.lang(), config.meaning_lang, *outcomes[i].meaning, config.model,
                 options.created_at});
      ++report.generated;
    } else {
      spdlog::warn("distill failed for '{}': {}", todo[i], outcomes[i].error);
      report.failures.push_back({todo[i], outcomes[i].error});
      ++report.failed;
    }
  }
  std::sort(report.failures.begin(), report.failures.end(),
            [](const Failure& a, const Failure& b) { return a.idiom < b.idiom; });
  return report;
}

}  // namespace idiomforge::distill
