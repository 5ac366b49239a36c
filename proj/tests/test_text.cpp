// Unicode helpers, core types, ingest, matching, prompt templates.

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "idiomforge/aho_corasick.hpp"
#include "idiomforge/core.hpp"
#include "idiomforge/ingest.hpp"
#include "idiomforge/match.hpp"
#include "idiomforge/prompt_template.hpp"
#include "idiomforge/wire.hpp"
#include "support.hpp"

using namespace idiomforge;
using testsupport::TempDir;

namespace {

const std::string kTable3Sentence = "为使讨论一气呵成，我们会在本报告第381至396段回应这些关注。";

// Naive substring scan over scalar values.
std::multiset<std::pair<std::size_t, std::size_t>> naive_spans(const std::u32string& text,
                                                               const std::vector<std::u32string>& patterns) {
  std::multiset<std::pair<std::size_t, std::size_t>> out;
  std::set<std::u32string> unique(patterns.begin(), patterns.end());
  for (const auto& p : unique) {
    if (p.empty() || p.size() > text.size()) continue;
    for (std::size_t i = 0; i + p.size() <= text.size(); ++i) {
      if (text.compare(i, p.size(), p) == 0) out.insert({i, i + p.size()});
    }
  }
  return out;
}

std::u32string random_text(std::mt19937_64& rng, std::size_t len, const std::u32string& alphabet) {
  std::u32string s;
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (std::size_t i = 0; i < len; ++i) s += alphabet[pick(rng)];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// unicode

TEST(Unicode, DecodesAndEncodesScalarValues) {
  std::u32string cps = unicode::decode_utf8("a一😀");
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], U'一');
  EXPECT_EQ(cps[2], U'\U0001F600');
  EXPECT_EQ(unicode::encode_utf8(cps), "a一😀");
  EXPECT_EQ(unicode::scalar_length(kTable3Sentence), 32u);
}

TEST(Unicode, RejectsMalformedUtf8) {
  EXPECT_FALSE(unicode::is_valid_utf8("\xC0\xAF"));      // overlong
  EXPECT_FALSE(unicode::is_valid_utf8("\xED\xA0\x80"));  // surrogate
  EXPECT_FALSE(unicode::is_valid_utf8("\xE4\xB8"));      // truncated
  EXPECT_FALSE(unicode::is_valid_utf8("\xF4\x90\x80\x80"));
  EXPECT_TRUE(unicode::is_valid_utf8(""));
  EXPECT_THROW(unicode::decode_utf8("ab\xFF"), ParseError);
}

TEST(Unicode, NfcMatchesReferenceData) {
  auto cases = testsupport::load_json(testsupport::data_dir() / "nfc_cases.json");
  ASSERT_GE(cases.size(), 300u);
  for (const auto& c : cases) {
    auto input = c["input"].get<std::string>();
    EXPECT_EQ(unicode::nfc(input), c["nfc"].get<std::string>()) << input;
  }
}

TEST(Unicode, TrimUsesUnicodeWhitespace) {
  EXPECT_EQ(unicode::trim("　 一气呵成\t\n"), "一气呵成");
  EXPECT_EQ(unicode::trim("   "), "");
}

// ---------------------------------------------------------------------------
// core

TEST(Core, LanguageCodeParsesCaseInsensitively) {
  EXPECT_EQ(LanguageCode::parse("zh"), LanguageCode::Zh());
  EXPECT_EQ(LanguageCode::parse("EN").code(), "En");
  EXPECT_EQ(LanguageCode::parse("ja").english_name(), "Japanese");
  EXPECT_THROW(LanguageCode::parse("Xx"), ParseError);
  EXPECT_THROW(LanguageCode::parse(""), ParseError);
}

TEST(Core, LanguageCodeRoundTripsThroughCanonicalForm) {
  for (std::string s : {"en", "En", "eN", "ZH", "zh", "jA"}) {
    EXPECT_EQ(LanguageCode::parse(s).code(), LanguageRegistry::canonical(s));
  }
}

TEST(Core, RegistryAcceptsNewLanguages) {
  LanguageRegistry::instance().add({"ko", "Korean", false, {}});
  EXPECT_EQ(LanguageCode::parse("KO").english_name(), "Korean");
  EXPECT_FALSE(LanguageCode::parse("Ko").space_delimited());
}

TEST(Core, LanguagePairLabel) {
  auto p = LanguagePair::parse("Zh->En");
  EXPECT_EQ(p.source, LanguageCode::Zh());
  EXPECT_EQ(p.label(), "Zh->En");
  EXPECT_EQ(LanguagePair::parse("ja-en").label(), "Ja->En");
}

TEST(Core, Rfc3339RoundTrip) {
  auto t = parse_rfc3339("2023-10-16T08:30:05Z");
  EXPECT_EQ(format_rfc3339(t), "2023-10-16T08:30:05Z");
  EXPECT_EQ(format_rfc3339(parse_rfc3339("1970-01-01T00:00:00Z")), "1970-01-01T00:00:00Z");
  EXPECT_THROW(parse_rfc3339("2023-10-16 08:30:05"), ParseError);
  EXPECT_THROW(parse_rfc3339("2023-13-01T00:00:00Z"), ParseError);
}

TEST(Core, RubricScoreAdmitsOnlyOneToThree) {
  for (int v = 1; v <= 3; ++v) EXPECT_EQ(RubricScore(v).value(), v);
  EXPECT_THROW(RubricScore(0), InvalidArgument);
  EXPECT_THROW(RubricScore(4), InvalidArgument);
  EXPECT_THROW(RubricScore(-1), InvalidArgument);
}

TEST(Core, KBEntryInvariants) {
  KBEntry e{"一气呵成", LanguageCode::Zh(), LanguageCode::En(), "in one go", "gpt-4", {}};
  EXPECT_NO_THROW(e.validate());
  auto bad = e;
  bad.meaning = "two\nlines";
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = e;
  bad.meaning.clear();
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = e;
  bad.source_model.clear();
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Core, PromptSpecDefaults) {
  EXPECT_DOUBLE_EQ(default_temperature(PromptMode::Judge), 0.1);
  EXPECT_DOUBLE_EQ(default_temperature(PromptMode::MeaningDistill), 0.7);
  PromptSpec direct{"x", PromptMode::Direct, LanguageCode::En(), LanguageCode::En(), 0.7, 10};
  EXPECT_THROW(direct.validate(), InvalidArgument);
  PromptSpec hot{"x", PromptMode::KBCoT, LanguageCode::En(), std::nullopt, 2.5, 10};
  EXPECT_THROW(hot.validate(), InvalidArgument);
}

TEST(Core, WireRoundTripOfRandomRecords) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> texts = {"一气呵成", "bite the bullet", "“quoted”", "a\"b", "日本語", "x"};
  auto pick = [&](const auto& v) { return v[rng() % v.size()]; };
  const std::vector<LanguageCode> langs = {LanguageCode::En(), LanguageCode::Zh(), LanguageCode::Ja()};
  for (int i = 0; i < 300; ++i) {
    KBEntry e{pick(texts), pick(langs), pick(langs), pick(texts), pick(texts),
              Timestamp{std::chrono::seconds(rng() % 4'000'000'000ULL)}};
    EXPECT_EQ(wire::decode_kb_entry(nlohmann::json::parse(wire::encode(e).dump())), e);

    TranslationRecord r;
    r.id = "r" + std::to_string(i);
    r.source_lang = pick(langs);
    r.target_lang = pick(langs);
    r.source_text = pick(texts);
    r.idiom = pick(texts);
    r.mode = std::vector{PromptMode::Direct, PromptMode::KBCoT, PromptMode::SelfCoT}[rng() % 3];
    if (r.mode != PromptMode::Direct) {
      r.meaning_used = pick(texts);
      r.meaning_source_model = pick(texts);
    }
    r.translator_model = "m";
    if (rng() % 4 == 0) {
      r.error = "boom";
    } else {
      r.translation = pick(texts);
    }
    EXPECT_EQ(wire::decode_translation_record(nlohmann::json::parse(wire::encode(r).dump())), r);

    EvalRecord ev;
    ev.record_id = r.id;
    if (rng() % 2) ev.pair = LanguagePair{r.source_lang, r.target_lang};
    if (rng() % 2) ev.judge_score = RubricScore(1 + static_cast<long long>(rng() % 3));
    if (rng() % 2) ev.human_score = RubricScore(1 + static_cast<long long>(rng() % 3));
    if (rng() % 2) ev.bleu_sentence = static_cast<double>(rng() % 10000) / 100.0;
    EXPECT_EQ(wire::decode_eval_record(nlohmann::json::parse(wire::encode(ev).dump())), ev);

    IdiomMatch m{pick(texts), rng() % 10, 0, rng() % 2 ? Provenance::Gold : Provenance::Detected};
    m.end = m.start + 1 + rng() % 5;
    EXPECT_EQ(wire::decode_match(nlohmann::json::parse(wire::encode(m).dump())), m);
  }
}

TEST(Core, WireRejectsOutOfRangeScores) {
  EXPECT_THROW(wire::decode_eval_record(nlohmann::json::parse(R"({"record_id":"a","judge_score":4})")),
               Error);
  EXPECT_THROW(wire::decode_eval_record(nlohmann::json::parse(R"({"record_id":"a","bleu_sentence":101})")),
               Error);
  EXPECT_THROW(wire::decode_translation_record(nlohmann::json::parse(
                   R"({"id":"a","source_lang":"Zh","target_lang":"En","source_text":"s","idiom":"i",)"
                   R"("mode":"direct","meaning_used":"m","translation":"t","translator_model":"x"})")),
               Error);
}

// ---------------------------------------------------------------------------
// ingest

TEST(Ingest, NormalizeCollapsesEnglishWhitespaceOnly) {
  EXPECT_EQ(ingest::normalize_idiom("  bite   the bullet ", LanguageCode::En()), "bite the bullet");
  EXPECT_EQ(ingest::normalize_idiom("一气呵成", LanguageCode::Zh()), "一气呵成");
  EXPECT_EQ(ingest::normalize_idiom(" 一气 呵成 ", LanguageCode::Zh()), "一气 呵成");
  EXPECT_EQ(ingest::normalize_idiom("Bite The Bullet", LanguageCode::En()), "Bite The Bullet");
  EXPECT_THROW(ingest::normalize_idiom(" \t ", LanguageCode::En()), InvalidArgument);
}

TEST(Ingest, NormalizeComposesDecomposedAccents) {
  EXPECT_EQ(ingest::normalize_idiom("cafe\u0301 society", LanguageCode::En()), "caf\u00e9 society");
  EXPECT_EQ(ingest::normalize_idiom("ＡＢ", LanguageCode::Ja()), "ＡＢ");  // NFC keeps full-width
}

TEST(Ingest, NormalizeIsIdempotent) {
  auto cases = testsupport::load_json(testsupport::data_dir() / "nfc_cases.json");
  for (const auto& c : cases) {
    auto raw = c["input"].get<std::string>();
    for (const auto& lang : {LanguageCode::En(), LanguageCode::Zh()}) {
      std::string once;
      try {
        once = ingest::normalize_idiom(raw, lang);
      } catch (const InvalidArgument&) {
        continue;
      }
      EXPECT_EQ(ingest::normalize_idiom(once, lang), once);
    }
  }
}

TEST(Ingest, PlainLinesDeduplicateInFirstAppearanceOrder) {
  TempDir dir("ingest");
  testsupport::spit(dir / "a.txt", "一气呵成\n寅吃卯粮\n一气呵成\n");
  auto set = ingest::load_idiom_list(dir / "a.txt", ingest::InputFormat::plain_lines(), LanguageCode::Zh(), "ds");
  EXPECT_EQ(set.idioms(), (std::vector<std::string>{"一气呵成", "寅吃卯粮"}));
  EXPECT_EQ(set.provenance().at("一气呵成"), std::set<std::string>{"ds"});
}

TEST(Ingest, JsonLinesFieldExtraction) {
  TempDir dir("ingest");
  testsupport::spit(dir / "a.jsonl",
                    "{\"idiom\":\"bite the bullet\"}\n{\"idiom\":\"spill the beans\"}\n{\"idiom\":\"break the ice\"}\n");
  auto set = ingest::load_idiom_list(dir / "a.jsonl", ingest::InputFormat::parse("jsonl:idiom"),
                                     LanguageCode::En(), "magpie");
  EXPECT_EQ(set.size(), 3u);
}

TEST(Ingest, CsvColumnMatchesSortUniqueOracle) {
  TempDir dir("ingest");
  std::mt19937_64 rng(5);
  std::vector<std::string> column;
  for (int i = 0; i < 80; ++i) column.push_back("idiom number " + std::to_string(i * 7919 % 1000));
  for (int i = 0; i < 20; ++i) column.push_back(column[rng() % 80]);
  std::shuffle(column.begin(), column.end(), rng);
  std::string csv;
  for (const auto& c : column) csv += "\"" + c + "\",other,\"x, y\"\n";
  testsupport::spit(dir / "a.csv", csv);

  auto set = ingest::load_idiom_list(dir / "a.csv", ingest::InputFormat::csv(0), LanguageCode::En(), "ds");
  auto oracle = column;
  std::sort(oracle.begin(), oracle.end());
  oracle.erase(std::unique(oracle.begin(), oracle.end()), oracle.end());
  EXPECT_EQ(set.size(), oracle.size());
  EXPECT_EQ(set.size(), 80u);
}

TEST(Ingest, TsvColumnAndQuotedCsvNewlines) {
  TempDir dir("ingest");
  testsupport::spit(dir / "a.tsv", "1\tbreak the ice\n2\tspill the beans\n");
  auto tsv = ingest::load_idiom_list(dir / "a.tsv", ingest::InputFormat::parse("tsv:1"), LanguageCode::En(), "t");
  EXPECT_EQ(tsv.idioms(), (std::vector<std::string>{"break the ice", "spill the beans"}));

  testsupport::spit(dir / "b.csv", "\"a\nb\",x\nplain,y\n");
  auto csv = ingest::load_idiom_list(dir / "b.csv", ingest::InputFormat::csv(0), LanguageCode::En(), "c");
  EXPECT_EQ(csv.idioms(), (std::vector<std::string>{"a b", "plain"}));
}

TEST(Ingest, MalformedRowsReportLineNumbers) {
  TempDir dir("ingest");
  testsupport::spit(dir / "a.csv", "one,two\nonly\n");
  try {
    ingest::load_idiom_list(dir / "a.csv", ingest::InputFormat::csv(1), LanguageCode::En(), "ds");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  testsupport::spit(dir / "b.jsonl", "{\"idiom\":\"x\"}\nnot json\n");
  try {
    ingest::load_idiom_list(dir / "b.jsonl", ingest::InputFormat::parse("jsonl:idiom"), LanguageCode::En(), "ds");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  testsupport::spit(dir / "c.txt", "ok\nbad \xFF byte\n");
  try {
    ingest::load_idiom_list(dir / "c.txt", ingest::InputFormat::plain_lines(), LanguageCode::En(), "ds");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(ingest::load_idiom_list(dir / "missing.txt", ingest::InputFormat::plain_lines(),
                                       LanguageCode::En(), "ds"),
               Error);
}

TEST(Ingest, EmptyFileIsNotAnError) {
  TempDir dir("ingest");
  testsupport::spit(dir / "a.txt", "\n\n");
  auto set = ingest::load_idiom_list(dir / "a.txt", ingest::InputFormat::plain_lines(), LanguageCode::Zh(), "ds");
  EXPECT_TRUE(set.empty());
}

TEST(Ingest, MergeSemantics) {
  std::vector<ingest::IdiomSet> none;
  EXPECT_TRUE(ingest::merge_idiom_sets(none, LanguageCode::Zh()).empty());

  ingest::IdiomSet a(LanguageCode::Zh()), b(LanguageCode::Zh());
  a.add("x", "A");
  b.add("x", "B");
  b.add("y", "B");
  std::vector<ingest::IdiomSet> ab{a, b};
  auto merged = ingest::merge_idiom_sets(ab, LanguageCode::Zh());
  EXPECT_EQ(merged.idioms(), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(merged.provenance().at("x"), (std::set<std::string>{"A", "B"}));

  std::vector<ingest::IdiomSet> aa{a, a};
  EXPECT_EQ(ingest::merge_idiom_sets(aa, LanguageCode::Zh()), a);

  ingest::IdiomSet en(LanguageCode::En());
  en.add("z", "C");
  std::vector<ingest::IdiomSet> mixed{a, en};
  EXPECT_THROW(ingest::merge_idiom_sets(mixed, LanguageCode::Zh()), InvalidArgument);
}

TEST(Ingest, MergeOfRandomSetsMatchesHashSetUnion) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ingest::IdiomSet> sets;
    std::unordered_set<std::string> oracle;
    for (int s = 0; s < 3; ++s) {
      ingest::IdiomSet set(LanguageCode::Zh());
      for (int i = 0; i < 30; ++i) {
        auto idiom = "成语" + std::to_string(rng() % 60);
        set.add(idiom, "d" + std::to_string(s));
        oracle.insert(idiom);
      }
      sets.push_back(set);
    }
    auto merged = ingest::merge_idiom_sets(sets, LanguageCode::Zh());
    EXPECT_EQ(merged.size(), oracle.size());
    std::vector<ingest::IdiomSet> reversed(sets.rbegin(), sets.rend());
    auto other = ingest::merge_idiom_sets(reversed, LanguageCode::Zh());
    EXPECT_EQ(std::set<std::string>(merged.idioms().begin(), merged.idioms().end()),
              std::set<std::string>(other.idioms().begin(), other.idioms().end()));
  }
}

TEST(Ingest, IdiomFileRoundTrip) {
  TempDir dir("ingest");
  ingest::IdiomSet set(LanguageCode::Zh());
  set.add("一气呵成", "b");
  set.add("一气呵成", "a");
  set.add("寅吃卯粮", "a");
  ingest::save_idiom_set(set, dir / "idioms.jsonl");
  EXPECT_EQ(testsupport::slurp(dir / "idioms.jsonl"),
            "{\"idiom\":\"一气呵成\",\"lang\":\"Zh\",\"sources\":[\"a\",\"b\"]}\n"
            "{\"idiom\":\"寅吃卯粮\",\"lang\":\"Zh\",\"sources\":[\"a\"]}\n");
  EXPECT_EQ(ingest::load_idiom_set(dir / "idioms.jsonl", LanguageCode::Zh()), set);
}

// ---------------------------------------------------------------------------
// matching

TEST(Match, LexiconKeepsPrefixPatterns) {
  ingest::IdiomSet one(LanguageCode::Zh());
  one.add("一气呵成", "t");
  EXPECT_EQ(Lexicon::build(one).patterns().size(), 1u);

  ingest::IdiomSet two(LanguageCode::Zh());
  two.add("寅吃", "t");
  two.add("寅吃卯粮", "t");
  auto lex = Lexicon::build(two);
  EXPECT_EQ(lex.patterns().size(), 2u);
  auto hits = find_idioms("他总是寅吃卯粮", lex);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].idiom, "寅吃卯粮");  // same start, longer first
  EXPECT_EQ(hits[1].idiom, "寅吃");

  EXPECT_THROW(Lexicon::build(ingest::IdiomSet(LanguageCode::Zh())), InvalidArgument);
}

TEST(Match, MembershipAgreesWithHashSet) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<char32_t> cjk(0x4E00, 0x4E40);
  ingest::IdiomSet set(LanguageCode::Zh());
  std::unordered_set<std::string> oracle;
  for (int i = 0; i < 500; ++i) {
    std::u32string p;
    for (int k = 0, n = 2 + static_cast<int>(rng() % 4); k < n; ++k) p += cjk(rng);
    auto s = unicode::encode_utf8(p);
    set.add(s, "r");
    oracle.insert(s);
  }
  auto lex = Lexicon::build(set);
  for (int i = 0; i < 2000; ++i) {
    std::u32string q;
    for (int k = 0, n = 2 + static_cast<int>(rng() % 4); k < n; ++k) q += cjk(rng);
    auto s = unicode::encode_utf8(q);
    EXPECT_EQ(lex.contains(s), oracle.count(s) > 0);
  }
  for (const auto& s : oracle) EXPECT_TRUE(lex.contains(s));
}

TEST(Match, Table3SentenceOffsets) {
  ingest::IdiomSet set(LanguageCode::Zh());
  set.add("一气呵成", "t");
  auto hits = find_idioms(kTable3Sentence, Lexicon::build(set));
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].start, 4u);
  EXPECT_EQ(hits[0].end, 8u);
  EXPECT_EQ(hits[0].provenance, Provenance::Detected);
  EXPECT_TRUE(find_idioms("", Lexicon::build(set)).empty());
}

TEST(Match, RandomizedAgainstNaiveScan) {
  std::mt19937_64 rng(17);
  const std::u32string alphabet = U"abc一二三气";
  for (int trial = 0; trial < 40; ++trial) {
    ingest::IdiomSet set(LanguageCode::Zh());
    std::vector<std::u32string> patterns;
    for (int i = 0; i < 30; ++i) {
      auto p = random_text(rng, 1 + rng() % 4, alphabet);
      patterns.push_back(p);
      set.add(unicode::encode_utf8(p), "r");
    }
    auto lex = Lexicon::build(set);
    for (int s = 0; s < 25; ++s) {
      auto text = random_text(rng, rng() % 40, alphabet);
      std::multiset<std::pair<std::size_t, std::size_t>> got;
      for (const auto& m : find_idioms(unicode::encode_utf8(text), lex)) {
        got.insert({m.start, m.end});
        EXPECT_EQ(unicode::encode_utf8(text.substr(m.start, m.end - m.start)), m.idiom);
      }
      EXPECT_EQ(got, naive_spans(text, patterns));
    }
  }
}

TEST(Match, EnglishIsCaseInsensitiveOnWordBoundaries) {
  ingest::IdiomSet set(LanguageCode::En());
  set.add("act", "t");
  set.add("Bite the bullet", "t");
  auto lex = Lexicon::build(set);
  EXPECT_TRUE(find_idioms("a tract of land", lex).empty());
  auto hits = find_idioms("Time to BITE THE BULLET, act now.", lex);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].idiom, "Bite the bullet");
  EXPECT_EQ(hits[0].start, 8u);
  EXPECT_EQ(hits[1].idiom, "act");
  EXPECT_TRUE(find_idioms("bit the bullet", lex).empty());
  EXPECT_EQ(find_idioms("act", lex).size(), 1u);
}

TEST(Match, SelectPrimaryIsLeftmostLongest) {
  EXPECT_FALSE(select_primary({}).has_value());
  std::vector<IdiomMatch> same_start{{"一气呵成", 4, 8, Provenance::Detected}, {"一气", 4, 6, Provenance::Detected}};
  EXPECT_EQ(select_primary(same_start)->idiom, "一气呵成");

  std::vector<IdiomMatch> overlap{{"ab", 2, 5, Provenance::Detected},
                                  {"cd", 4, 9, Provenance::Detected},
                                  {"x", 3, 4, Provenance::Detected}};
  EXPECT_EQ(select_primary(overlap)->start, 2u);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    auto shuffled = overlap;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    detail::sort_matches(shuffled);
    EXPECT_EQ(select_primary(shuffled), select_primary(overlap));
  }
}

TEST(Match, PairGold) {
  auto m = pair_gold(kTable3Sentence, "一气呵成");
  EXPECT_EQ(m.start, 4u);
  EXPECT_EQ(m.end, 8u);
  EXPECT_EQ(m.provenance, Provenance::Gold);
  EXPECT_EQ(pair_gold("好好学习，好好", "好好").start, 0u);
  try {
    pair_gold("没有成语的句子", "一气呵成");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("gold idiom not found"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// templates

TEST(Templates, RenderAndEscapes) {
  EXPECT_EQ(prompts::render("{a} and {{b}}", {{"a", "x"}}), "x and {b}");
  EXPECT_EQ(prompts::placeholders("{a}{b}{{c}}"), (std::set<std::string>{"a", "b"}));
  try {
    prompts::render("{a} {missing}", {{"a", "x"}});
    FAIL();
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("{missing}"), std::string::npos);
  }
}

TEST(Templates, ValidationNamesMissingPlaceholder) {
  try {
    prompts::validate(prompts::Kind::Judge, "Evaluation (score only):");
    FAIL();
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("lacks placeholder {"), std::string::npos);
  }
}

TEST(Templates, ShippedFilesMatchBuiltins) {
  auto shipped = prompts::TemplateSet::load(testsupport::source_dir() / "templates");
  auto builtin = prompts::TemplateSet::builtin();
  for (auto kind : prompts::kAllKinds) {
    for (const auto& lang : {LanguageCode::En(), LanguageCode::Zh(), LanguageCode::Ja()}) {
      ASSERT_EQ(shipped.has(kind, lang), builtin.has(kind, lang));
      if (builtin.has(kind, lang)) EXPECT_EQ(shipped.get(kind, lang), builtin.get(kind, lang));
    }
  }
}

TEST(Templates, OverrideDirectoryReplacesOneKind) {
  TempDir dir("tpl");
  testsupport::spit(dir / "En" / "direct.txt", "Translate {source_lang}->{target_lang}: {source_text}\n");
  auto set = prompts::TemplateSet::load(dir.path());
  EXPECT_EQ(set.get(prompts::Kind::Direct, LanguageCode::En()), "Translate {source_lang}->{target_lang}: {source_text}");
  EXPECT_EQ(set.get(prompts::Kind::KBCoT, LanguageCode::En()),
            prompts::TemplateSet::builtin().get(prompts::Kind::KBCoT, LanguageCode::En()));
  testsupport::spit(dir / "En" / "kb_cot.txt", "no placeholders\n");
  EXPECT_THROW(prompts::TemplateSet::load(dir.path()), TemplateError);
}

TEST(Templates, IndefiniteArticle) {
  EXPECT_EQ(prompts::indefinite_article("English"), "an");
  EXPECT_EQ(prompts::indefinite_article("Chinese"), "a");
}
