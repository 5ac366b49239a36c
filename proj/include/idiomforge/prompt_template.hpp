#pragma once

// Named-placeholder prompt templates. `{name}` is substituted, `{{` and `}}`
// are literal braces. Templates are keyed by (kind, prompt language); the
// built-in set can be overlaid from a directory laid out as
// <dir>/<lang>/<kind>.txt (lang lowercase, e.g. templates/en/direct.txt).

#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "idiomforge/core.hpp"
#include "idiomforge/error.hpp"

namespace idiomforge::prompts {

using Values = std::map<std::string, std::string, std::less<>>;

namespace detail {

template <typename OnText, typename OnName>
void scan(std::string_view tpl, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  while (i < tpl.size()) {
    char c = tpl[i];
    if (c == '{' && i + 1 < tpl.size() && tpl[i + 1] == '{') {
      on_text("{");
      i += 2;
    } else if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
      on_text("}");
      i += 2;
    } else if (c == '{') {
      auto close = tpl.find('}', i);
      if (close == std::string_view::npos) throw TemplateError("unclosed '{' in template");
      auto name = tpl.substr(i + 1, close - i - 1);
      if (name.empty()) throw TemplateError("empty placeholder '{}' in template");
      for (char n : name) {
        if (!(std::isalnum(static_cast<unsigned char>(n)) || n == '_')) {
          throw TemplateError("bad placeholder name '{" + std::string(name) + "}'");
        }
      }
      on_name(name);
      i = close + 1;
    } else if (c == '}') {
      throw TemplateError("stray '}' in template");
    } else {
      auto next = tpl.find_first_of("{}", i);
      if (next == std::string_view::npos) next = tpl.size();
      on_text(tpl.substr(i, next - i));
      i = next;
    }
  }
}

}  // namespace detail

inline std::set<std::string> placeholders(std::string_view tpl) {
  std::set<std::string> out;
  detail::scan(tpl, [](std::string_view) {}, [&](std::string_view n) { out.emplace(n); });
  return out;
}

/// Throws TemplateError naming the first placeholder that has no value.
inline std::string render(std::string_view tpl, const Values& values) {
  std::string out;
  detail::scan(
      tpl, [&](std::string_view text) { out.append(text); },
      [&](std::string_view name) {
        auto it = values.find(name);
        if (it == values.end()) {
          throw TemplateError("no value for placeholder {" + std::string(name) + "}");
        }
        out.append(it->second);
      });
  return out;
}

enum class Kind {
  MeaningDistill,
  MeaningDistillCase,
  MeaningDistillQuery,
  Direct,
  KBCoT,
  SelfCoTMeaning,
  Judge,
  JudgeExample,
};

inline constexpr std::array kAllKinds = {Kind::MeaningDistill, Kind::MeaningDistillCase,
                                         Kind::MeaningDistillQuery, Kind::Direct,
                                         Kind::KBCoT, Kind::SelfCoTMeaning,
                                         Kind::Judge, Kind::JudgeExample};

inline std::string_view file_stem(Kind k) {
  switch (k) {
    case Kind::MeaningDistill: return "meaning_distill";
    case Kind::MeaningDistillCase: return "meaning_distill_case";
    case Kind::MeaningDistillQuery: return "meaning_distill_query";
    case Kind::Direct: return "direct";
    case Kind::KBCoT: return "kb_cot";
    case Kind::SelfCoTMeaning: return "self_cot_meaning";
    case Kind::Judge: return "judge";
    case Kind::JudgeExample: return "judge_example";
  }
  return "";
}

/// Placeholders a template of this kind must reference.
inline std::vector<std::string_view> required_placeholders(Kind k) {
  switch (k) {
    case Kind::MeaningDistill: return {"idiom_lang", "meaning_lang", "cases"};
    case Kind::MeaningDistillCase:
      return {"number", "idiom_lang", "idiom", "meaning_lang", "meaning"};
    case Kind::MeaningDistillQuery: return {"number", "idiom_lang", "idiom", "meaning_lang"};
    case Kind::Direct: return {"source_lang", "target_lang", "source_text"};
    case Kind::KBCoT:
      return {"idiom", "meaning", "source_lang", "target_lang", "source_text"};
    case Kind::SelfCoTMeaning: return {"source_lang", "idiom", "meaning_lang"};
    case Kind::Judge:
      return {"source_lang", "target_lang", "source_text", "idiom", "translation", "examples"};
    case Kind::JudgeExample:
      return {"source_lang", "target_lang", "source_text", "idiom", "translation", "score"};
  }
  return {};
}

inline void validate(Kind k, std::string_view tpl) {
  auto present = placeholders(tpl);
  for (auto name : required_placeholders(k)) {
    if (!present.count(std::string(name))) {
      throw TemplateError("template " + std::string(file_stem(k)) + " lacks placeholder {" +
                          std::string(name) + "}");
    }
  }
}

namespace builtin {

inline constexpr std::string_view kIdiomNote =
    "Please note: Idiom always expresses figurative meaning which is different from literal "
    "meaning of its constituent words.";

inline const std::map<std::pair<Kind, std::string>, std::string>& table() {
  static const std::map<std::pair<Kind, std::string>, std::string> t = {
      {{Kind::MeaningDistill, "En"},
       "Given {idiom_lang_article} {idiom_lang} idiom, please write the idiom's figurative "
       "{meaning_lang} meaning. Please note: Idiom always expresses figurative meaning which "
       "is different from literal meaning of its constituent words.\n{cases}"},
      {{Kind::MeaningDistillCase, "En"},
       "Case {number}:\n{idiom_lang} idiom: {idiom}\n{meaning_lang} meaning: {meaning}"},
      {{Kind::MeaningDistillQuery, "En"},
       "Case {number}:\n{idiom_lang} idiom: {idiom}\n{meaning_lang} meaning:"},
      {{Kind::Direct, "En"},
       "Translate the following {source_lang} sentence into {target_lang}.\n"
       "{source_lang}: {source_text}\n{target_lang}:"},
      {{Kind::KBCoT, "En"},
       "\"{idiom}\" means \"{meaning}\".\n"
       "Given the above knowledge, translate the following {source_lang} sentence into "
       "{target_lang}.\n{source_lang}: {source_text}\n{target_lang}:"},
      {{Kind::SelfCoTMeaning, "En"},
       "Given {source_lang_article} {source_lang} idiom, please write the idiom's figurative "
       "{meaning_lang} meaning. Please note: Idiom always expresses figurative meaning which "
       "is different from literal meaning of its constituent words.\n"
       "{source_lang} idiom: {idiom}\n{meaning_lang} meaning:"},
      {{Kind::Judge, "En"},
       "Evaluate the idiom translation in the given {target_lang} translation of "
       "{source_lang_article} {source_lang} sentence. Focus on the idiom's figurative "
       "meaning.\n"
       "1 point: Ignores, mistranslates, or only translates the literal meaning of the "
       "idiom.\n"
       "2 points: Conveys basic figurative meaning but may lack refinement or have minor "
       "imperfections.\n"
       "3 points: Exceptional translation, accurately conveying figurative meaning, context, "
       "and cultural nuances.\n"
       "{examples}Evaluate the following translation:\n"
       "{source_lang} sentence: {source_text}\n"
       "Idiom in the {source_lang} sentence: {idiom}\n"
       "{target_lang} translation: {translation}\n"
       "Evaluation (score only):"},
      {{Kind::JudgeExample, "En"},
       "Evaluate the following translation:\n"
       "{source_lang} sentence: {source_text}\n"
       "Idiom in the {source_lang} sentence: {idiom}\n"
       "{target_lang} translation: {translation}\n"
       "Evaluation (score only): {score}\n"},
      // Translated defaults; override with files for other wording.
      {{Kind::Direct, "Zh"},
       "将下面的{source_lang}句子翻译成{target_lang}。\n{source_lang}：{source_text}\n{target_lang}："},
      {{Kind::KBCoT, "Zh"},
       "“{idiom}”的意思是“{meaning}”。\n根据以上知识，将下面的{source_lang}句子翻译成{target_lang}。\n"
       "{source_lang}：{source_text}\n{target_lang}："},
      {{Kind::SelfCoTMeaning, "Zh"},
       "给定一个{source_lang}习语，请写出该习语的{meaning_lang}比喻义。请注意：习语总是表达比喻义，"
       "不同于其组成词语的字面意思。\n{source_lang}习语：{idiom}\n{meaning_lang}意思："},
      {{Kind::Direct, "Ja"},
       "次の{source_lang}の文を{target_lang}に翻訳してください。\n{source_lang}：{source_text}\n"
       "{target_lang}："},
      {{Kind::KBCoT, "Ja"},
       "「{idiom}」は「{meaning}」という意味です。\n"
       "上記の知識に基づいて、次の{source_lang}の文を{target_lang}に翻訳してください。\n"
       "{source_lang}：{source_text}\n{target_lang}："},
      {{Kind::SelfCoTMeaning, "Ja"},
       "{source_lang}の慣用句について、その比喩的な意味を{meaning_lang}で書いてください。"
       "注意：慣用句は常に、構成する語の字義とは異なる比喩的な意味を表します。\n"
       "{source_lang}の慣用句：{idiom}\n{meaning_lang}の意味："},
  };
  return t;
}

}  // namespace builtin

class TemplateSet {
 public:
  static TemplateSet builtin() {
    TemplateSet set;
    set.templates_ = builtin::table();
    return set;
  }

  /// Built-ins overlaid with every <dir>/<lang>/<kind>.txt that exists. One
  /// trailing newline is dropped from each file.
  static TemplateSet load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
      throw ConfigError("template directory not found: " + dir.string());
    }
    TemplateSet set = builtin();
    for (const auto& lang_dir : std::filesystem::directory_iterator(dir)) {
      if (!lang_dir.is_directory()) continue;
      auto lang = LanguageCode::parse(lang_dir.path().filename().string());
      for (Kind k : kAllKinds) {
        auto file = lang_dir.path() / (std::string(file_stem(k)) + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        if (!text.empty() && text.back() == '\n') text.pop_back();
        if (!text.empty() && text.back() == '\r') text.pop_back();
        try {
          validate(k, text);
        } catch (const TemplateError& e) {
          throw TemplateError(file.string() + ": " + e.what());
        }
        set.templates_[{k, lang.code()}] = std::move(text);
      }
    }
    return set;
  }

  void set(Kind k, const LanguageCode& lang, std::string text) {
    validate(k, text);
    templates_[{k, lang.code()}] = std::move(text);
  }

  const std::string& get(Kind k, const LanguageCode& lang) const {
    auto it = templates_.find({k, lang.code()});
    if (it == templates_.end()) {
      throw TemplateError("no " + std::string(file_stem(k)) + " template for prompt language " +
                          lang.code());
    }
    return it->second;
  }

  bool has(Kind k, const LanguageCode& lang) const {
    return templates_.count({k, lang.code()}) > 0;
  }

 private:
  std::map<std::pair<Kind, std::string>, std::string> templates_;
};

/// "a" or "an" for an English language name.
inline std::string_view indefinite_article(std::string_view name) {
  if (name.empty()) return "a";
  switch (name.front()) {
    case 'A': case 'E': case 'I': case 'O': case 'U':
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return "an";
    default:
      return "a";
  }
}

/// Placeholder values describing a language as seen from `prompt_lang`:
/// {<prefix>} and {<prefix>_article}.
inline void add_language(Values& values, const std::string& prefix, const LanguageCode& lang,
                         const LanguageCode& prompt_lang) {
  auto name = lang.name_in(prompt_lang);
  values[prefix + "_article"] = std::string(indefinite_article(name));
  values[prefix] = std::move(name);
}

}  // namespace idiomforge::prompts
