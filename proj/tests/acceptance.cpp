// Acceptance checks. Prints one PASS/FAIL line per criterion; exits 1 if any fail.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include <fmt/core.h>

#include "idiomforge/bleu.hpp"
#include "idiomforge/distill.hpp"
#include "idiomforge/judge.hpp"
#include "idiomforge/kbstore.hpp"
#include "idiomforge/match.hpp"
#include "idiomforge/provider.hpp"
#include "idiomforge/report.hpp"
#include "idiomforge/stats.hpp"
#include "idiomforge/translate.hpp"
#include "idiomforge/wire.hpp"
#include "support.hpp"

using namespace idiomforge;
using testsupport::TempDir;

namespace {

const std::string kTable3Sentence = "为使讨论一气呵成，我们会在本报告第381至396段回应这些关注。";
const std::string kTable2Meaning =
    "to complete a task or work in one go, without stopping or taking a break";

struct Outcome {
  bool ok = true;
  std::string detail;
};

/// Collects the first few mismatches of one criterion.
class Check {
 public:
  void expect(bool cond, const std::string& what) {
    ++checks_;
    if (cond) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Outcome result(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, fmt::format("{} of {} checks failed: {}", failures_, checks_, messages_)};
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::string messages_;
};

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------

double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double c = 0, d = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double a = x[i] - x[j], b = y[i] - y[j];
      if (a == 0) ++tx;
      if (b == 0) ++ty;
      if (a != 0 && b != 0) (a * b > 0 ? c : d) += 1;
    }
  }
  double n0 = static_cast<double>(x.size() * (x.size() - 1) / 2);
  return (c - d) / std::sqrt((n0 - tx) * (n0 - ty));
}

Outcome correlation_oracles() {
  Check check;
  const double tol = 1e-9;
  std::size_t cases = 0;

  // closed forms for n <= 4
  struct Closed {
    std::vector<double> x, y;
    double pearson, spearman, kendall;
  };
  const std::vector<Closed> closed = {
      {{1, 2, 3}, {2, 4, 6}, 1.0, 1.0, 1.0},
      {{1, 2, 3}, {6, 4, 2}, -1.0, -1.0, -1.0},
      {{1, 2, 3, 4}, {1, 3, 2, 4}, 0.8, 0.8, 4.0 / 6.0},
      {{1, 2, 2, 3}, {1, 2, 3, 3}, 2.0 / std::sqrt(2.0 * 2.75), 3.75 / 4.5, 4.0 / 5.0},
  };
  for (const auto& c : closed) {
    check.expect(near(stats::pearson(c.x, c.y), c.pearson, tol), "closed-form pearson");
    check.expect(near(stats::spearman(c.x, c.y), c.spearman, tol), "closed-form spearman");
    check.expect(near(stats::kendall_tau_b(c.x, c.y), c.kendall, tol), "closed-form kendall");
    ++cases;
  }

  // exhaustive pair counting
  std::mt19937_64 rng(2023);
  for (int i = 0; i < 500;) {
    std::size_t n = 3 + rng() % 10;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 4);
    for (auto& v : y) v = static_cast<double>(rng() % 4);
    if (std::set<double>(x.begin(), x.end()).size() < 2 || std::set<double>(y.begin(), y.end()).size() < 2) continue;
    check.expect(near(stats::kendall_tau_b(x, y), brute_tau_b(x, y), tol), "tau-b vs pair counting");
    ++cases;
    ++i;
  }

  // external statistics tool
  auto data = testsupport::load_json(testsupport::data_dir() / "correlation_cases.json");
  for (const auto& c : data["random"]) {
    auto x = c["x"].get<std::vector<double>>(), y = c["y"].get<std::vector<double>>();
    check.expect(near(stats::pearson(x, y), c["pearson"].get<double>(), tol), "pearson vs oracle");
    check.expect(near(stats::spearman(x, y), c["spearman"].get<double>(), tol), "spearman vs oracle");
    check.expect(near(stats::kendall_tau_b(x, y), c["kendall_b"].get<double>(), tol), "kendall vs oracle");
    ++cases;
  }
  check.expect(cases >= 1000, "fewer than 1000 cases");
  return check.result(fmt::format("{} cases within 1e-9", cases));
}

// ---------------------------------------------------------------------------

Outcome matcher_equivalence() {
  Check check;
  std::mt19937_64 rng(7);
  const std::u32string alphabet = U"abcxyz一二三气呵成为";
  auto random_text = [&](std::size_t len) {
    std::u32string s;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
  };

  ingest::IdiomSet set(LanguageCode::Zh());
  std::set<std::u32string> patterns;
  while (patterns.size() < 500) {
    auto p = random_text(1 + rng() % 6);
    patterns.insert(p);
    set.add(unicode::encode_utf8(p), "random");
  }
  auto lexicon = Lexicon::build(set);

  std::size_t total = 0;
  for (int s = 0; s < 1000; ++s) {
    auto text = random_text(rng() % 80);
    std::multiset<std::pair<std::size_t, std::size_t>> expected, got;
    for (const auto& p : patterns) {
      for (std::size_t i = 0; i + p.size() <= text.size(); ++i) {
        if (text.compare(i, p.size(), p) == 0) expected.insert({i, i + p.size()});
      }
    }
    for (const auto& m : find_idioms(unicode::encode_utf8(text), lexicon)) {
      got.insert({m.start, m.end});
      check.expect(unicode::encode_utf8(text.substr(m.start, m.end - m.start)) == m.idiom, "idiom text vs span");
    }
    check.expect(got == expected, "span multiset differs from naive scan");
    total += expected.size();
  }

  ingest::IdiomSet table3(LanguageCode::Zh());
  table3.add("一气呵成", "table3");
  auto hits = find_idioms(kTable3Sentence, Lexicon::build(table3));
  check.expect(hits.size() == 1 && hits[0].start == 4 && hits[0].end == 8, "Table 3 span is not [4,8)");
  return check.result(fmt::format("1000 sentences x 500 patterns, {} spans; Table 3 span [4,8)", total));
}

// ---------------------------------------------------------------------------

Outcome bleu_correctness() {
  Check check;
  const auto en = LanguageCode::En();
  std::vector<Tokens> corpus = {tokenize("the cat sat on the mat", en), tokenize("a quick brown fox jumps", en),
                                tokenize("to complete a task in one go", en)};
  auto identity = corpus_bleu(corpus, corpus);
  check.expect(identity.score == 100.0, fmt::format("identity scored {}", identity.score));

  std::vector<Tokens> other = {tokenize("one two three four", en), tokenize("five six seven eight nine", en),
                               tokenize("ten eleven twelve", en)};
  check.expect(corpus_bleu(corpus, other).score == 0.0, "disjoint corpus is not 0");

  auto oracle = testsupport::load_json(testsupport::data_dir() / "bleu_catmat.json");
  auto catmat = sentence_bleu(tokenize("the cat sat on the mat", en), tokenize("the cat is on the mat", en));
  check.expect(near(catmat.score, oracle["score"].get<double>(), 1e-6),
               fmt::format("cat/mat {} vs {}", catmat.score, oracle["score"].get<double>()));

  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  for (int i = 0; i < 10000; ++i) {
    std::vector<Tokens> cands, refs;
    for (std::size_t k = 1 + rng() % 4; k > 0; --k) {
      Tokens c, r;
      for (std::size_t n = rng() % 9; n > 0; --n) c.push_back(vocab[rng() % vocab.size()]);
      for (std::size_t n = rng() % 9; n > 0; --n) r.push_back(vocab[rng() % vocab.size()]);
      if (rng() % 5 == 0) r = c;
      cands.push_back(std::move(c));
      refs.push_back(std::move(r));
    }
    double s = corpus_bleu(cands, refs).score;
    check.expect(s >= 0.0 && s <= 100.0, fmt::format("score {} out of bounds", s));
  }
  return check.result(fmt::format("identity {:.3f}, disjoint 0, cat/mat {:.6f}, 10000 random corpora in [0,100]",
                                  identity.score, catmat.score));
}

// ---------------------------------------------------------------------------

Outcome kb_round_trip() {
  Check check;
  TempDir dir("accept-kb");
  std::mt19937_64 rng(10000);
  const std::vector<LanguageCode> langs = {LanguageCode::En(), LanguageCode::Zh(), LanguageCode::Ja()};
  const std::vector<std::string> models = {"gpt-4", "chatgpt", "bloomz", "instructgpt"};
  const std::vector<std::string> pieces = {"一", "气", "呵", "成", "猫", "の", "手", "“", "\"", "\\", "é", "😀"};
  KnowledgeBase kb;
  while (kb.size() < 10000) {
    auto il = langs[rng() % 3];
    std::string idiom = il == LanguageCode::En() ? "word " + std::to_string(rng() % 4000)
                                                 : pieces[rng() % 7] + std::to_string(rng() % 4000);
    std::string meaning = "m";
    for (std::size_t k = rng() % 6; k > 0; --k) meaning += pieces[rng() % pieces.size()];
    kb.upsert({idiom, il, langs[rng() % 3], meaning, models[rng() % models.size()],
               Timestamp{std::chrono::seconds(rng() % 4'000'000'000)}});
  }
  save_kb(kb, dir / "kb.jsonl");
  auto loaded = load_kb(dir / "kb.jsonl");
  check.expect(loaded == kb, "load(save(kb)) != kb");
  check.expect(loaded.index_consistent(), "index inconsistent after load");
  save_kb(loaded, dir / "kb2.jsonl");
  check.expect(testsupport::slurp(dir / "kb.jsonl") == testsupport::slurp(dir / "kb2.jsonl"), "resave differs");

  // stats against a group-by oracle
  std::map<std::string, std::pair<std::size_t, std::set<std::string>>> groups;
  for (const auto& [key, e] : kb.entries()) {
    auto& g = groups[e.idiom_lang.code()];
    ++g.first;
    g.second.insert(e.idiom);
  }
  auto st = kb.stats();
  check.expect(st.size() == groups.size(), "stats language count");
  for (const auto& [lang, s] : st) {
    check.expect(s.entries == groups[lang.code()].first, "stats entries for " + lang.code());
    check.expect(s.idioms == groups[lang.code()].second.size(), "stats idioms for " + lang.code());
  }

  // distill rerun idempotence
  ingest::IdiomSet idioms(LanguageCode::Zh());
  for (int i = 0; i < 50; ++i) idioms.add("成语" + std::to_string(i), "accept");
  distill::DistillConfig config;
  config.exemplars = {{"明目张胆", "straightforwardly, without any concealment", LanguageCode::Zh(), LanguageCode::En()}};
  config.model = "gpt-4";
  FunctionProvider fake([](const CompletionRequest& r) { return "meaning " + std::to_string(r.prompt.size()); });
  KnowledgeBase distilled;
  distill::BatchOptions options;
  options.created_at = parse_rfc3339("1970-01-01T00:00:00Z");
  distill::distill_batch(idioms, config, fake, distilled, options);
  save_kb(distilled, dir / "d1.jsonl");
  auto calls = fake.calls();
  auto rerun = distill::distill_batch(idioms, config, fake, distilled, options);
  save_kb(distilled, dir / "d2.jsonl");
  check.expect(rerun.generated == 0 && rerun.skipped_existing == 50, "rerun generated entries");
  check.expect(fake.calls() == calls, "rerun called the provider");
  check.expect(testsupport::slurp(dir / "d1.jsonl") == testsupport::slurp(dir / "d2.jsonl"), "rerun changed the KB");
  return check.result(fmt::format("10000-entry round trip, {} languages match group-by, distill rerun unchanged",
                                  st.size()));
}

// ---------------------------------------------------------------------------

Outcome end_to_end_determinism() {
  Check check;
  TempDir dir("accept-e2e");
  auto args = [&](const std::string& out) {
    return "pipeline --config \"" + (testsupport::demo_dir() / "pipeline.yaml").string() + "\" --out-dir \"" +
           (dir / out).string() + "\" --cache-dir \"" + (dir / "cache").string() + "\"";
  };
  auto start = std::chrono::steady_clock::now();
  int first = testsupport::run_cli(args("run1"), dir / "run1.txt");
  int second = testsupport::run_cli(args("run2"), dir / "run2.txt");
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.expect(first == 0 && second == 0, fmt::format("exit codes {} and {}", first, second));
  if (first != 0 || second != 0) return check.result("");

  auto a = testsupport::snapshot(dir / "run1");
  auto b = testsupport::snapshot(dir / "run2");
  check.expect(a == b, "artifacts differ between runs");
  for (auto name : {"idioms.jsonl", "kb.jsonl", "translations.jsonl", "evals.jsonl", "bleu.json", "report.json",
                    "report.txt"}) {
    check.expect(a.count(name) == 1, std::string("missing ") + name);
  }
  auto first_calls = testsupport::run_log_counter(dir / "run1" / "run.log", "provider_calls");
  auto second_calls = testsupport::run_log_counter(dir / "run2" / "run.log", "provider_calls");
  auto hits = testsupport::run_log_counter(dir / "run2" / "run.log", "cache_hits");
  check.expect(first_calls > 0, "first run made no provider calls");
  check.expect(second_calls == 0, fmt::format("second run made {} provider calls", second_calls));
  check.expect(seconds < 5.0, fmt::format("took {:.2f} s", seconds));
  return check.result(fmt::format("{} identical artifacts, provider_calls {} then {} ({} cache hits), {:.2f} s",
                                  a.size(), first_calls, second_calls, hits, seconds));
}

// ---------------------------------------------------------------------------

Outcome prompt_fidelity() {
  Check check;
  auto templates = prompts::TemplateSet::load(testsupport::source_dir() / "templates");
  const auto zh = LanguageCode::Zh(), en = LanguageCode::En();

  distill::DistillConfig dc;
  dc.exemplars = {{"明目张胆", "straightforwardly, without any concealment", zh, en}};
  dc.model = "gpt-4";
  dc.templates = templates;
  auto distill_text = distill::build_meaning_prompt("一气呵成", zh, dc).text;
  check.expect(distill_text.find("write the idiom's figurative English meaning") != std::string::npos,
               "distill phrase missing");

  translate::TranslateConfig tc;
  tc.translator_model = "gpt-4";
  tc.templates = templates;
  tc.mode = PromptMode::Direct;
  auto direct = translate::build_translation_prompt(kTable3Sentence, "一气呵成", std::nullopt, tc).text;
  check.expect(direct.find("Translate the following Chinese sentence into English.") != std::string::npos,
               "direct task line missing");
  check.expect(direct.find("Given the above knowledge") == std::string::npos, "direct prompt mentions knowledge");
  tc.mode = PromptMode::KBCoT;
  auto kbcot = translate::build_translation_prompt(kTable3Sentence, "一气呵成", kTable2Meaning, tc).text;
  check.expect(kbcot.find("Given the above knowledge, translate") != std::string::npos, "kb-cot phrase missing");
  check.expect(kbcot.find(kTable2Meaning) != std::string::npos, "kb-cot prompt lacks the meaning");

  judge::JudgeConfig jc;
  jc.judge_model = "gpt-4";
  jc.templates = templates;
  auto judge_text = judge::build_judge_prompt(kTable3Sentence, "一气呵成", "To make the discussion flow in one go",
                                              zh, en, jc)
                        .text;
  check.expect(judge_text.find("Evaluation (score only):") != std::string::npos, "judge phrase missing");
  return check.result("distill, direct, kb-cot and judge prompts carry the anchored phrases");
}

// ---------------------------------------------------------------------------

std::string fuzz_response(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "0", "1", "2", "3", "4", "5", "9", "10", "33", "-", "+", ".", " ", "\n", ":", "/", "score", "Score: ",
      "points", "a", "Z", "一", "分", "Evaluation (score only): ", "2.5", "1e3", "\t", "(", ")", "99999999999"};
  std::string s;
  for (std::size_t k = rng() % 8; k > 0; --k) s += pieces[rng() % pieces.size()];
  return s;
}

Outcome score_domain_safety() {
  Check check;
  std::mt19937_64 rng(404);
  std::size_t parsed = 0, errors = 0;
  for (int i = 0; i < 10000; ++i) {
    auto response = fuzz_response(rng);
    try {
      int v = judge::parse_score(response).value();
      check.expect(v >= 1 && v <= 3, fmt::format("value {} from '{}'", v, response));
      ++parsed;
    } catch (const judge::ScoreError&) {
      ++errors;
    } catch (const std::exception& e) {
      check.expect(false, fmt::format("untyped error '{}' from '{}'", e.what(), response));
    }
  }

  std::vector<TranslationRecord> records(10000);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].id = "r" + std::to_string(i);
    records[i].source_text = kTable3Sentence;
    records[i].idiom = "一气呵成";
    records[i].translation = "t" + std::to_string(i);
  }
  std::mt19937_64 judge_rng(405);
  std::mutex m;
  FunctionProvider fake([&](const CompletionRequest&) {
    std::lock_guard lock(m);
    return fuzz_response(judge_rng);
  });
  judge::JudgeConfig jc;
  jc.judge_model = "gpt-4";
  for (const auto& e : judge::judge_batch(records, jc, fake)) {
    if (e.judge_score) {
      check.expect(e.judge_score->value() >= 1 && e.judge_score->value() <= 3, "eval score out of domain");
      check.expect(!e.error, "eval has both score and error");
    } else {
      check.expect(e.error.has_value(), "eval has neither score nor error");
    }
  }
  return check.result(fmt::format("10000 fuzzed responses: {} scores in {{1,2,3}}, {} typed errors", parsed, errors));
}

// ---------------------------------------------------------------------------

Outcome report_fixture() {
  Check check;
  TempDir dir("accept-report");
  report::Report rep;
  rep.correlations.push_back({"Zh->En", {{"judge", 0.6939, 0.6923, 0.6375, 60, 0, ""}}});
  testsupport::spit(dir / "table5.json", report::render_json(rep));
  int status = testsupport::run_cli("report --in \"" + (dir / "table5.json").string() +
                                    "\" --format text-table --out \"" + (dir / "table5.txt").string() + "\"");
  check.expect(status == 0, fmt::format("report exited {}", status));
  auto text = testsupport::slurp(dir / "table5.txt");
  auto pos = text.find("Zh->En");
  check.expect(pos != std::string::npos, "no Zh->En row");
  if (pos == std::string::npos) return check.result("");
  auto row = text.substr(pos, text.find('\n', pos) - pos);
  auto p = row.find("0.6939"), s = row.find("0.6923"), k = row.find("0.6375");
  check.expect(p != std::string::npos && s != std::string::npos && k != std::string::npos, "values missing: " + row);
  check.expect(p < s && s < k, "columns out of order: " + row);
  check.expect(text.find("Pearson's r") != std::string::npos, "header missing");
  return check.result("row: " + row.substr(0, row.find_last_not_of(' ') + 1));
}

// ---------------------------------------------------------------------------

Outcome mode_separation() {
  Check check;
  TempDir dir("accept-modes");
  std::mt19937_64 rng(9);
  const std::vector<LanguageCode> langs = {LanguageCode::En(), LanguageCode::Zh(), LanguageCode::Ja()};
  const std::vector<std::string> models = {"gpt-4", "chatgpt", "bloomz"};
  std::size_t direct_records = 0, kbcot_records = 0;

  auto read_back = [&](const std::filesystem::path& path) {
    std::vector<TranslationRecord> out;
    jsonl::for_each(path, [&](const jsonl::json& j, std::size_t) { out.push_back(wire::decode_translation_record(j)); });
    return out;
  };
  auto verify = [&](const std::vector<TranslationRecord>& records, const KnowledgeBase& kb, const LanguageCode& meaning_lang,
                    const std::vector<std::string>& preference) {
    for (const auto& r : records) {
      if (r.mode == PromptMode::Direct) {
        ++direct_records;
        check.expect(!r.meaning_used, "direct record " + r.id + " has meaning_used");
        continue;
      }
      ++kbcot_records;
      auto expected = kb.lookup(ingest::normalize_idiom(r.idiom, r.source_lang), r.source_lang, meaning_lang,
                                std::nullopt, preference);
      if (expected) {
        check.expect(r.meaning_used == expected->meaning, "kb-cot record " + r.id + " meaning differs from lookup");
      } else {
        check.expect(!r.meaning_used && r.error, "kb-cot record " + r.id + " has a meaning the KB lacks");
      }
    }
  };

  for (int run = 0; run < 30; ++run) {
    KnowledgeBase kb;
    std::vector<translate::DatasetItem> items;
    for (int i = 0; i < 40; ++i) {
      std::string idiom = "成语" + std::to_string(rng() % 60);
      items.push_back({fmt::format("r{:03}", i), "他做事" + idiom + "。", idiom});
      if (rng() % 4 == 0) continue;
      for (const auto& lang : langs) {
        if (rng() % 2) kb.upsert({idiom, LanguageCode::Zh(), lang, fmt::format("m{}", rng() % 10000), models[rng() % 3], {}});
      }
    }
    FunctionProvider fake([](const CompletionRequest& r) { return "translation of " + std::to_string(r.prompt.size()); });
    translate::TranslateConfig config;
    config.translator_model = "gpt-4";
    config.meaning_lang = langs[rng() % 3];
    config.model_preference = {models[rng() % 3]};
    for (auto mode : {PromptMode::Direct, PromptMode::KBCoT}) {
      config.mode = mode;
      auto path = dir / fmt::format("run{}-{}.jsonl", run, to_string(mode));
      {
        jsonl::Writer writer(path);
        for (const auto& r : translate::run_translation(items, config, &kb, fake)) writer.write(wire::encode(r));
      }
      verify(read_back(path), kb, *config.meaning_lang, config.model_preference);
    }
  }

  // the CLI pipeline on the demo, in both modes
  for (const std::string mode : {"direct", "kb-cot"}) {
    auto out = dir / ("demo-" + mode);
    int status = testsupport::run_cli("pipeline --config \"" + (testsupport::demo_dir() / "pipeline.yaml").string() +
                                      "\" --out-dir \"" + out.string() + "\" --mode " + mode);
    check.expect(status == 0, fmt::format("demo {} exited {}", mode, status));
    if (status != 0) continue;
    verify(read_back(out / "translations.jsonl"), load_kb(out / "kb.jsonl"), LanguageCode::En(), {"gpt-4"});
  }
  return check.result(fmt::format("{} direct and {} kb-cot records checked post hoc", direct_records, kbcot_records));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"correlation oracle suite (< 10 s)", correlation_oracles},
      {"matcher equivalence (< 30 s)", matcher_equivalence},
      {"BLEU correctness", bleu_correctness},
      {"KB round trip and idempotence", kb_round_trip},
      {"end-to-end determinism (< 5 s)", end_to_end_determinism},
      {"prompt fidelity", prompt_fidelity},
      {"score-domain safety", score_domain_safety},
      {"report fixture reproduction", report_fixture},
      {"mode separation", mode_separation},
  };
  const std::map<int, double> limits = {{1, 10.0}, {2, 30.0}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (auto it = limits.find(number); it != limits.end() && seconds >= it->second) {
      outcome = {false, fmt::format("{:.2f} s exceeds {} s; {}", seconds, it->second, outcome.detail)};
    }
    failed += !outcome.ok;
    std::cout << fmt::format("{} [{}] {}: {} ({:.2f} s)\n", outcome.ok ? "PASS" : "FAIL", number, criteria[i].first,
                             outcome.detail, seconds);
  }
  return failed == 0 ? 0 : 1;
}
