#pragma once

// Translation prompts (direct, KB-conditioned, self-generated meaning) and
// the batch runner that turns a dataset into TranslationRecords.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "idiomforge/core.hpp"
#include "idiomforge/distill.hpp"
#include "idiomforge/ingest.hpp"
#include "idiomforge/jsonl.hpp"
#include "idiomforge/kbstore.hpp"
#include "idiomforge/parallel.hpp"
#include "idiomforge/prompt_template.hpp"
#include "idiomforge/provider.hpp"

namespace idiomforge::translate {

inline constexpr std::string_view kSelfModel = "self";

struct TranslateConfig {
  LanguageCode source_lang = LanguageCode::Zh();
  LanguageCode target_lang = LanguageCode::En();
  PromptMode mode = PromptMode::Direct;
  LanguageCode prompt_lang = LanguageCode::En();
  /// Defaults to target_lang.
  std::optional<LanguageCode> meaning_lang;
  std::optional<std::string> meaning_source_model;
  std::vector<std::string> model_preference;
  std::string translator_model;
  double temperature = kGenerationTemperature;
  int max_tokens = 256;
  std::optional<std::vector<std::string>> stop = std::vector<std::string>{"\n\n"};
  std::size_t max_meaning_chars = 200;
  prompts::TemplateSet templates = prompts::TemplateSet::builtin();

  LanguageCode effective_meaning_lang() const { return meaning_lang.value_or(target_lang); }

  void validate() const {
    if (mode != PromptMode::Direct && mode != PromptMode::KBCoT && mode != PromptMode::SelfCoT) {
      throw InvalidArgument("translation mode must be direct, kb-cot or self-cot");
    }
    if (translator_model.empty()) throw InvalidArgument("translator model is not set");
  }
};

struct DatasetItem {
  std::string id;
  std::string source_text;
  std::string idiom;
};

/// JSONL of {"id","source_text","idiom"}; ids must be unique.
inline std::vector<DatasetItem> load_dataset(const std::filesystem::path& path,
                                             const std::string& idiom_field = "idiom") {
  std::vector<DatasetItem> out;
  std::set<std::string> seen;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    DatasetItem item{jsonl::require_string(obj, "id"), jsonl::require_string(obj, "source_text"),
                     jsonl::require_string(obj, idiom_field.c_str())};
    if (!seen.insert(item.id).second) throw ParseError("duplicate id '" + item.id + "'");
    out.push_back(std::move(item));
  });
  return out;
}

/// Uniform integer in [0, bound) by rejection; unlike the standard
/// distributions its output is identical on every platform.
inline std::uint64_t bounded_random(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Picks `n` items with a seeded partial Fisher-Yates shuffle and returns
/// them in their original order.
template <typename T>
std::vector<T> sample(const std::vector<T>& items, std::size_t n, std::uint64_t seed) {
  if (n >= items.size()) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto j = i + bounded_random(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

/// Double quotes would collide with the template's own quoting; they become
/// single quotes.
inline std::string sanitize_meaning(std::string_view meaning) {
  std::string out;
  out.reserve(meaning.size());
  for (char32_t c : unicode::decode_utf8(meaning)) {
    if (c == U'"') c = U'\'';
    if (c == U'“') c = U'‘';
    if (c == U'”') c = U'’';
    unicode::append_utf8(out, c);
  }
  return out;
}

namespace detail {

inline prompts::Values language_values(const TranslateConfig& config) {
  prompts::Values v;
  prompts::add_language(v, "source_lang", config.source_lang, config.prompt_lang);
  prompts::add_language(v, "target_lang", config.target_lang, config.prompt_lang);
  prompts::add_language(v, "meaning_lang", config.effective_meaning_lang(), config.prompt_lang);
  return v;
}

inline PromptSpec make_spec(std::string text, PromptMode mode, const TranslateConfig& config) {
  PromptSpec spec;
  spec.text = std::move(text);
  spec.mode = mode;
  spec.prompt_lang = config.prompt_lang;
  if (mode != PromptMode::Direct) spec.meaning_lang = config.effective_meaning_lang();
  spec.temperature = config.temperature;
  spec.max_tokens = config.max_tokens;
  spec.validate();
  return spec;
}

inline PromptSpec render_with_meaning(const std::string& source_text, const std::string& idiom,
                                      const std::string& meaning, PromptMode mode,
                                      const TranslateConfig& config) {
  auto v = language_values(config);
  v["source_text"] = source_text;
  v["idiom"] = idiom;
  v["meaning"] = sanitize_meaning(meaning);
  return make_spec(prompts::render(config.templates.get(prompts::Kind::KBCoT, config.prompt_lang), v),
                   mode, config);
}

}  // namespace detail

/// Direct: task line, labelled source, open target label. KB-CoT: the
/// meaning sentence, then the knowledge-conditioned task. Self-CoT: the
/// first-stage prompt asking the model for the idiom's meaning (see
/// build_self_cot_translation_prompt for the second stage).
inline PromptSpec build_translation_prompt(const std::string& source_text, const std::string& idiom,
                                           const std::optional<std::string>& meaning,
                                           const TranslateConfig& config) {
  if (source_text.empty()) throw InvalidArgument("source text is empty");
  if (idiom.empty()) throw InvalidArgument("idiom is empty");
  switch (config.mode) {
    case PromptMode::Direct: {
      if (meaning) throw InvalidArgument("direct prompts take no meaning");
      auto v = detail::language_values(config);
      v["source_text"] = source_text;
      return detail::make_spec(
          prompts::render(config.templates.get(prompts::Kind::Direct, config.prompt_lang), v),
          PromptMode::Direct, config);
    }
    case PromptMode::KBCoT:
      if (!meaning || meaning->empty()) throw InvalidArgument("kb-cot prompts need a meaning");
      return detail::render_with_meaning(source_text, idiom, *meaning, PromptMode::KBCoT, config);
    case PromptMode::SelfCoT: {
      if (meaning) throw InvalidArgument("self-cot generates its own meaning");
      auto v = detail::language_values(config);
      v["idiom"] = idiom;
      return detail::make_spec(
          prompts::render(config.templates.get(prompts::Kind::SelfCoTMeaning, config.prompt_lang), v),
          PromptMode::SelfCoT, config);
    }
    default:
      throw InvalidArgument("not a translation mode: " + std::string(to_string(config.mode)));
  }
}

/// Second Self-CoT stage: the KB-CoT layout filled with the model's own meaning.
inline PromptSpec build_self_cot_translation_prompt(const std::string& source_text,
                                                    const std::string& idiom,
                                                    const std::string& self_meaning,
                                                    const TranslateConfig& config) {
  return detail::render_with_meaning(source_text, idiom, self_meaning, PromptMode::SelfCoT, config);
}

/// Trims, drops an echoed "<Language>:" label, cuts at the first blank line.
inline std::string parse_translation(std::string_view response) {
  std::string text = unicode::trim(response);
  for (const auto& name : LanguageRegistry::instance().all_names()) {
    for (std::string_view colon : {":", "："}) {
      auto label = name + std::string(colon);
      if (text.rfind(label, 0) == 0) {
        text = unicode::trim(std::string_view(text).substr(label.size()));
        break;
      }
    }
  }
  auto cps = unicode::decode_utf8(text);
  std::u32string_view rest(cps);
  std::u32string kept;
  while (!rest.empty()) {
    auto nl = rest.find(U'\n');
    auto line = rest.substr(0, nl);
    if (unicode::trim(line).empty()) break;
    if (!kept.empty()) kept.push_back(U'\n');
    kept.append(line);
    if (nl == std::u32string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  auto out = unicode::encode_utf8(unicode::trim(std::u32string_view(kept)));
  if (out.empty()) throw ParseError("empty translation");
  return out;
}

namespace detail {

inline CompletionRequest request_for(const PromptSpec& spec, const TranslateConfig& config) {
  return {spec.text, spec.temperature, spec.max_tokens, config.translator_model, config.stop};
}

inline TranslationRecord translate_one(const DatasetItem& item, const TranslateConfig& config,
                                       const KnowledgeBase* kb, Provider& provider) {
  TranslationRecord rec;
  rec.id = item.id;
  rec.source_lang = config.source_lang;
  rec.target_lang = config.target_lang;
  rec.source_text = item.source_text;
  rec.idiom = item.idiom;
  rec.mode = config.mode;
  rec.translator_model = config.translator_model;
  try {
    std::optional<std::string> meaning;
    PromptSpec spec;
    switch (config.mode) {
      case PromptMode::KBCoT: {
        auto idiom = ingest::normalize_idiom(item.idiom, config.source_lang);
        auto entry = kb->lookup(idiom, config.source_lang, config.effective_meaning_lang(),
                                config.meaning_source_model, config.model_preference);
        if (!entry) throw InvalidArgument("no meaning for idiom '" + item.idiom + "'");
        rec.meaning_used = entry->meaning;
        rec.meaning_source_model = entry->source_model;
        spec = build_translation_prompt(item.source_text, item.idiom, entry->meaning, config);
        break;
      }
      case PromptMode::SelfCoT: {
        auto stage1 = build_translation_prompt(item.source_text, item.idiom, std::nullopt, config);
        auto first = provider.complete(request_for(stage1, config));
        auto self_meaning = distill::parse_meaning(first.text, distill::open_label(stage1.text),
                                                   config.max_meaning_chars);
        rec.meaning_used = self_meaning;
        rec.meaning_source_model = std::string(kSelfModel);
        spec = build_self_cot_translation_prompt(item.source_text, item.idiom, self_meaning, config);
        break;
      }
      default:
        spec = build_translation_prompt(item.source_text, item.idiom, std::nullopt, config);
    }
    rec.translation = parse_translation(provider.complete(request_for(spec, config)).text);
  } catch (const Error& e) {
    rec.translation.clear();
    rec.error = e.what();
  }
  return rec;
}

}  // namespace detail

/// One record per item, in input order. Per-record failures (KB miss,
/// transport, unparseable output) are stored in the record's `error`.
inline std::vector<TranslationRecord> run_translation(const std::vector<DatasetItem>& items,
                                                      const TranslateConfig& config,
                                                      const KnowledgeBase* kb, Provider& provider,
                                                      int parallelism = 4) {
  config.validate();
  if (config.mode == PromptMode::KBCoT && kb == nullptr) {
    throw ConfigError("kb-cot translation needs a knowledge base");
  }
  return parallel_map(items, parallelism, [&](const DatasetItem& item, std::size_t) {
    return detail::translate_one(item, config, kb, provider);
  });
}

}  // namespace idiomforge::translate
