#pragma once

// JSONL encodings of the core types. Encoders emit fields in a fixed order
// so that artifacts are byte-stable; decoders ignore unknown fields.

#include "idiomforge/core.hpp"
#include "idiomforge/jsonl.hpp"

namespace idiomforge::wire {

using jsonl::json;
using jsonl::ordered_json;

inline ordered_json encode(const KBEntry& e) {
  ordered_json j;
  j["idiom"] = e.idiom;
  j["idiom_lang"] = e.idiom_lang.code();
  j["meaning_lang"] = e.meaning_lang.code();
  j["meaning"] = e.meaning;
  j["source_model"] = e.source_model;
  j["created_at"] = format_rfc3339(e.created_at);
  return j;
}

inline KBEntry decode_kb_entry(const json& j) {
  KBEntry e{jsonl::require_string(j, "idiom"),
            LanguageCode::parse(jsonl::require_string(j, "idiom_lang")),
            LanguageCode::parse(jsonl::require_string(j, "meaning_lang")),
            jsonl::require_string(j, "meaning"),
            jsonl::require_string(j, "source_model"),
            parse_rfc3339(jsonl::require_string(j, "created_at"))};
  e.validate();
  return e;
}

inline ordered_json encode(const IdiomMatch& m) {
  ordered_json j;
  j["idiom"] = m.idiom;
  j["start"] = m.start;
  j["end"] = m.end;
  j["provenance"] = to_string(m.provenance);
  return j;
}

inline IdiomMatch decode_match(const json& j) {
  auto start = jsonl::optional_integer(j, "start");
  auto end = jsonl::optional_integer(j, "end");
  if (!start || !end || *start < 0 || *end <= *start) {
    throw ParseError("match needs 0 <= start < end");
  }
  return {jsonl::require_string(j, "idiom"), static_cast<std::size_t>(*start),
          static_cast<std::size_t>(*end),
          parse_provenance(jsonl::require_string(j, "provenance"))};
}

inline ordered_json encode(const TranslationRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["source_lang"] = r.source_lang.code();
  j["target_lang"] = r.target_lang.code();
  j["source_text"] = r.source_text;
  j["idiom"] = r.idiom;
  j["mode"] = to_string(r.mode);
  if (r.meaning_used) j["meaning_used"] = *r.meaning_used;
  if (r.meaning_source_model) j["meaning_source_model"] = *r.meaning_source_model;
  j["translation"] = r.translation;
  j["translator_model"] = r.translator_model;
  if (r.error) j["error"] = *r.error;
  return j;
}

inline TranslationRecord decode_translation_record(const json& j) {
  TranslationRecord r;
  r.id = jsonl::require_string(j, "id");
  r.source_lang = LanguageCode::parse(jsonl::require_string(j, "source_lang"));
  r.target_lang = LanguageCode::parse(jsonl::require_string(j, "target_lang"));
  r.source_text = jsonl::require_string(j, "source_text");
  r.idiom = jsonl::require_string(j, "idiom");
  r.mode = parse_prompt_mode(jsonl::require_string(j, "mode"));
  if (r.mode != PromptMode::Direct && r.mode != PromptMode::KBCoT &&
      r.mode != PromptMode::SelfCoT) {
    throw ParseError("translation record mode must be direct, kb-cot or self-cot");
  }
  r.meaning_used = jsonl::optional_string(j, "meaning_used");
  r.meaning_source_model = jsonl::optional_string(j, "meaning_source_model");
  r.translation = jsonl::require_string(j, "translation");
  r.translator_model = jsonl::require_string(j, "translator_model");
  r.error = jsonl::optional_string(j, "error");
  if (r.mode == PromptMode::Direct && r.meaning_used) {
    throw ParseError("direct record " + r.id + " carries a meaning");
  }
  return r;
}

inline ordered_json encode(const EvalRecord& r) {
  ordered_json j;
  j["record_id"] = r.record_id;
  if (r.pair) {
    j["source_lang"] = r.pair->source.code();
    j["target_lang"] = r.pair->target.code();
  }
  if (r.judge_score) j["judge_score"] = r.judge_score->value();
  if (r.human_score) j["human_score"] = r.human_score->value();
  if (r.bleu_sentence) j["bleu_sentence"] = *r.bleu_sentence;
  if (r.error) j["error"] = *r.error;
  return j;
}

inline EvalRecord decode_eval_record(const json& j) {
  EvalRecord r;
  r.record_id = jsonl::require_string(j, "record_id");
  auto src = jsonl::optional_string(j, "source_lang");
  auto tgt = jsonl::optional_string(j, "target_lang");
  if (src && tgt) r.pair = LanguagePair{LanguageCode::parse(*src), LanguageCode::parse(*tgt)};
  if (auto s = jsonl::optional_integer(j, "judge_score")) r.judge_score = RubricScore(*s);
  if (auto s = jsonl::optional_integer(j, "human_score")) r.human_score = RubricScore(*s);
  if (auto b = jsonl::optional_number(j, "bleu_sentence")) {
    if (*b < 0.0 || *b > 100.0) throw ParseError("bleu_sentence outside [0,100]");
    r.bleu_sentence = *b;
  }
  r.error = jsonl::optional_string(j, "error");
  return r;
}

}  // namespace idiomforge::wire
