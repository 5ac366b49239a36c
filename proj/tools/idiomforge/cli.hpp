#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "idiomforge/bleu.hpp"
#include "idiomforge/distill.hpp"
#include "idiomforge/http_provider.hpp"
#include "idiomforge/ingest.hpp"
#include "idiomforge/judge.hpp"
#include "idiomforge/kbstore.hpp"
#include "idiomforge/match.hpp"
#include "idiomforge/report.hpp"
#include "idiomforge/translate.hpp"
#include "idiomforge/wire.hpp"

#include "config.hpp"

namespace idiomforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRecordFailures = 1;
inline constexpr int kExitConfig = 2;

inline constexpr std::string_view kMockEpoch = "1970-01-01T00:00:00Z";

// ---------------------------------------------------------------------------
// Provider wiring

class ProviderSession {
 public:
  explicit ProviderSession(const PipelineConfig& c) : record_path_(c.provider.record) {
    if (c.provider.kind == "mock") {
      if (c.provider.fixtures.empty()) throw ConfigError("--provider mock needs --fixtures <path>");
      if (!fs::exists(c.provider.fixtures)) {
        throw ConfigError("fixture file not found: " + c.provider.fixtures);
      }
      base_ = mock_from_fixtures(c.provider.fixtures, {c.provider.strict_fixtures, ""});
    } else if (c.provider.kind == "http") {
      base_ = std::make_unique<HttpProvider>(HttpProviderConfig::from_env());
    } else {
      throw ConfigError("unknown provider '" + c.provider.kind + "' (expected http or mock)");
    }
    ProviderStack::Options options;
    if (c.provider.cache) options.cache_dir = c.effective_cache_dir();
    options.parallelism = c.provider.parallelism;
    options.rps = c.provider.rps;
    stack_ = std::make_unique<ProviderStack>(*base_, std::move(options));
    if (!record_path_.empty()) recorder_ = std::make_unique<RecordingProvider>(*stack_);
  }

  Provider& provider() { return recorder_ ? static_cast<Provider&>(*recorder_) : *stack_; }
  ProviderCounters counters() const { return stack_->counters(); }

  void finish() {
    if (recorder_) recorder_->save(record_path_);
  }

 private:
  std::string record_path_;
  std::unique_ptr<Provider> base_;
  std::unique_ptr<ProviderStack> stack_;
  std::unique_ptr<RecordingProvider> recorder_;
};

// ---------------------------------------------------------------------------
// Run log

class RunLog {
 public:
  RunLog(std::string command, std::string config_yaml)
      : command_(std::move(command)), config_(std::move(config_yaml)) {}

  void stage(const std::string& name, const std::string& key, const std::string& value) {
    stages_.push_back({name, key, value});
  }
  void counters(const ProviderCounters& c) { counters_ = c; }

  void write(const fs::path& dir) const {
    fs::create_directories(dir);
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "command" << YAML::Value << command_;
    e << YAML::Key << "config" << YAML::Value << YAML::Load(config_);
    if (!stages_.empty()) {
      e << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
      for (const auto& s : stages_) {
        e << YAML::Flow << YAML::BeginMap << YAML::Key << "stage" << YAML::Value << s.name
          << YAML::Key << s.key << YAML::Value << s.value << YAML::EndMap;
      }
      e << YAML::EndSeq;
    }
    if (counters_) {
      e << YAML::Key << "counters" << YAML::Value << YAML::BeginMap;
      e << YAML::Key << "requests" << YAML::Value << counters_->requests;
      e << YAML::Key << "cache_hits" << YAML::Value << counters_->cache_hits;
      e << YAML::Key << "provider_calls" << YAML::Value << counters_->provider_calls;
      e << YAML::Key << "retries" << YAML::Value << counters_->retries;
      e << YAML::Key << "failures" << YAML::Value << counters_->failures;
      e << YAML::EndMap;
    }
    e << YAML::EndMap;
    std::ofstream out(dir / "run.log", std::ios::binary | std::ios::trunc);
    out << e.c_str() << '\n';
  }

 private:
  struct Stage {
    std::string name, key, value;
  };
  std::string command_;
  std::string config_;
  std::vector<Stage> stages_;
  std::optional<ProviderCounters> counters_;
};

inline fs::path dir_of(const std::string& out) {
  auto parent = fs::path(out).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

/// Options of one subcommand with their effective values, for the run log.
inline std::string options_yaml(const CLI::App& app) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    std::string value;
    if (opt->count() > 0) {
      auto results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    e << YAML::Key << opt->get_lnames().front() << YAML::Value << value;
  }
  e << YAML::EndMap;
  return e.c_str();
}

inline Timestamp resolve_created_at(const PipelineConfig& c) {
  if (!c.created_at.empty()) return parse_rfc3339(c.created_at);
  if (c.provider.kind == "mock") return parse_rfc3339(std::string(kMockEpoch));
  return now_utc();
}

inline prompts::TemplateSet load_templates(const std::string& dir) {
  return dir.empty() ? prompts::TemplateSet::builtin() : prompts::TemplateSet::load(dir);
}

/// Exit status once the work is done: provider failures are a transport
/// problem (2); record failures only count under --strict (1).
inline int finish_status(const ProviderCounters& counters, std::size_t record_failures, bool strict) {
  if (counters.failures > 0) {
    spdlog::error("{} provider request(s) failed", counters.failures);
    return kExitConfig;
  }
  if (record_failures > 0) {
    spdlog::warn("{} record(s) failed", record_failures);
    if (strict) return kExitRecordFailures;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Stages shared by the subcommands and `pipeline`

inline ingest::IdiomSet stage_ingest(const std::vector<std::string>& inputs, const std::string& format,
                                     const LanguageCode& lang, const std::string& dataset_name,
                                     const std::string& out) {
  auto fmt_spec = ingest::InputFormat::parse(format);
  std::vector<ingest::IdiomSet> sets;
  for (const auto& in : inputs) {
    auto name = dataset_name.empty() ? fs::path(in).stem().string() : dataset_name;
    sets.push_back(ingest::load_idiom_list(in, fmt_spec, lang, name));
  }
  auto merged = ingest::merge_idiom_sets(sets, lang);
  ingest::save_idiom_set(merged, out);
  spdlog::info("ingest: {} idioms -> {}", merged.idioms().size(), out);
  return merged;
}

struct DistillOutcome {
  KnowledgeBase kb;
  distill::DistillReport report;
};

inline DistillOutcome stage_distill(const ingest::IdiomSet& idioms, const PipelineConfig& c,
                                    const std::string& kb_in, const std::string& kb_out,
                                    Provider& provider) {
  distill::DistillConfig config;
  if (!c.exemplars.empty()) config.exemplars = distill::load_exemplars(c.exemplars);
  config.meaning_lang = LanguageCode::parse(c.effective_meaning_lang());
  config.model = c.distill_model;
  config.zero_shot = c.zero_shot;
  config.templates = load_templates(c.templates);

  DistillOutcome out;
  if (!kb_in.empty() && fs::exists(kb_in)) out.kb = load_kb(kb_in);
  distill::BatchOptions options;
  options.refresh = c.refresh;
  options.parallelism = c.provider.parallelism;
  options.created_at = resolve_created_at(c);
  out.report = distill::distill_batch(idioms, config, provider, out.kb, options);
  save_kb(out.kb, kb_out);
  spdlog::info("distill: generated {}, skipped {}, failed {} -> {}", out.report.generated,
               out.report.skipped_existing, out.report.failed, kb_out);
  return out;
}

inline std::vector<TranslationRecord> stage_translate(const PipelineConfig& c,
                                                      const KnowledgeBase* kb,
                                                      const std::optional<std::string>& meaning_model,
                                                      const std::string& out, Provider& provider) {
  translate::TranslateConfig config;
  config.source_lang = LanguageCode::parse(c.source_lang);
  config.target_lang = LanguageCode::parse(c.target_lang);
  config.mode = parse_prompt_mode(c.mode);
  config.prompt_lang = LanguageCode::parse(c.prompt_lang);
  if (!c.meaning_lang.empty()) config.meaning_lang = LanguageCode::parse(c.meaning_lang);
  config.meaning_source_model = meaning_model;
  config.model_preference = {c.distill_model};
  config.translator_model = c.translate_model;
  config.templates = load_templates(c.templates);
  config.validate();
  if (config.mode == PromptMode::KBCoT && kb == nullptr) {
    throw ConfigError("--mode kb-cot needs a knowledge base (--kb <file>)");
  }

  auto items = translate::load_dataset(c.sentences, c.idiom_field);
  if (c.sample > 0) items = translate::sample(items, c.sample, c.seed);
  auto records = translate::run_translation(items, config, kb, provider, c.provider.parallelism);
  jsonl::Writer writer(out);
  for (const auto& r : records) writer.write(wire::encode(r));
  spdlog::info("translate: {} records ({}) -> {}", records.size(), c.mode, out);
  return records;
}

inline std::vector<EvalRecord> stage_judge(const std::vector<TranslationRecord>& records,
                                           const PipelineConfig& c, Provider& provider) {
  judge::JudgeConfig config;
  config.judge_model = c.judge_model;
  config.shots = c.shots;
  if (!c.judge_examples.empty()) config.examples = judge::load_judge_examples(c.judge_examples);
  config.templates = load_templates(c.templates);
  return judge::judge_batch(records, config, provider, c.provider.parallelism);
}

inline void write_evals(const std::vector<EvalRecord>& evals, const std::string& out) {
  jsonl::Writer writer(out);
  for (const auto& e : evals) writer.write(wire::encode(e));
}

inline std::map<std::string, std::string> load_references(const std::string& path) {
  std::map<std::string, std::string> refs;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    auto id = jsonl::require_string(obj, "id");
    if (!refs.emplace(id, jsonl::require_string(obj, "reference")).second) {
      throw ParseError("duplicate reference id '" + id + "'");
    }
  });
  return refs;
}

/// Corpus BLEU over the records; fills bleu_sentence on the matching evals.
inline BleuScore stage_bleu(const std::vector<TranslationRecord>& records,
                            const std::map<std::string, std::string>& refs,
                            const LanguageCode& target_lang, std::vector<EvalRecord>& evals) {
  std::vector<Tokens> cands, references;
  std::map<std::string, double> per_record;
  for (const auto& r : records) {
    auto it = refs.find(r.id);
    if (it == refs.end()) throw InvalidArgument("no reference for record '" + r.id + "'");
    cands.push_back(tokenize(r.translation, target_lang));
    references.push_back(tokenize(it->second, target_lang));
    per_record[r.id] = sentence_bleu(cands.back(), references.back()).score;
  }
  for (auto& e : evals) {
    if (auto it = per_record.find(e.record_id); it != per_record.end()) e.bleu_sentence = it->second;
  }
  return corpus_bleu(cands, references);
}

inline jsonl::ordered_json bleu_json(const BleuScore& s, std::size_t n) {
  jsonl::ordered_json j;
  j["metric"] = kBleuLabel;
  j["score"] = s.score;
  j["precisions"] = s.precisions;
  j["brevity_penalty"] = s.brevity_penalty;
  j["candidate_len"] = s.candidate_len;
  j["reference_len"] = s.reference_len;
  j["sentences"] = n;
  return j;
}

inline std::vector<report::AggregateRow> aggregates_of(const std::vector<EvalRecord>& evals,
                                                       const std::string& system) {
  std::map<std::string, std::vector<RubricScore>> by_pair;
  for (const auto& e : evals) {
    if (e.judge_score && e.pair) by_pair[e.pair->label()].push_back(*e.judge_score);
  }
  std::vector<report::AggregateRow> rows;
  for (const auto& [pair, scores] : by_pair) {
    rows.push_back({system, pair, stats::aggregate(scores)});
  }
  return rows;
}

inline std::vector<report::Metric> default_metrics(const std::vector<EvalRecord>& evals) {
  std::vector<report::Metric> m{report::Metric::Judge};
  if (std::any_of(evals.begin(), evals.end(), [](const EvalRecord& e) { return e.bleu_sentence; })) {
    m.push_back(report::Metric::BleuSentence);
  }
  return m;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename T, typename Decode>
std::vector<T> load_jsonl(const std::string& path, Decode decode) {
  std::vector<T> out;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) { out.push_back(decode(obj)); });
  return out;
}

inline std::size_t count_errors(const std::vector<TranslationRecord>& records) {
  return std::count_if(records.begin(), records.end(), [](const auto& r) { return r.error.has_value(); });
}

inline std::size_t count_errors(const std::vector<EvalRecord>& evals) {
  return std::count_if(evals.begin(), evals.end(), [](const auto& e) { return e.error.has_value(); });
}

// ---------------------------------------------------------------------------
// Flag plumbing. Flags are parsed into `flags`; after parsing, the ones the
// user actually gave are copied onto the resolved config.

class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& (*field)(PipelineConfig&),
                   const std::string& help) {
    auto* opt = app->add_option(name, field(flags_), help)->capture_default_str();
    apply_.push_back([opt, field](PipelineConfig& target, PipelineConfig& flags) {
      if (opt->count() > 0) field(target) = field(flags);
    });
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& name, bool& (*field)(PipelineConfig&),
                        const std::string& help, bool value = true) {
    auto* opt = app->add_flag(name, help);
    apply_.push_back([opt, field, value](PipelineConfig& target, PipelineConfig&) {
      if (opt->count() > 0) field(target) = value;
    });
    return opt;
  }

  void apply(PipelineConfig& target) {
    for (auto& fn : apply_) fn(target, flags_);
  }

 private:
  PipelineConfig flags_;
  std::vector<std::function<void(PipelineConfig&, PipelineConfig&)>> apply_;
};

#define IDIOMFORGE_FIELD(expr) +[](PipelineConfig& c) -> decltype(auto) { return (c.expr); }

inline void add_provider_flags(Overrides& o, CLI::App* app) {
  o.add(app, "--provider", IDIOMFORGE_FIELD(provider.kind), "Completion provider: http or mock")
      ->check(CLI::IsMember({"http", "mock"}));
  o.add(app, "--fixtures", IDIOMFORGE_FIELD(provider.fixtures), "Fixture JSONL for the mock provider");
  o.add(app, "--record", IDIOMFORGE_FIELD(provider.record),
        "Write every response to this fixture file");
  o.add(app, "--parallelism", IDIOMFORGE_FIELD(provider.parallelism), "Concurrent provider requests")
      ->check(CLI::PositiveNumber);
  o.add(app, "--rps", IDIOMFORGE_FIELD(provider.rps), "Requests per second (0: unlimited)")
      ->check(CLI::NonNegativeNumber);
  o.add(app, "--cache-dir", IDIOMFORGE_FIELD(provider.cache_dir), "Response cache directory");
  o.add_flag(app, "--no-cache", IDIOMFORGE_FIELD(provider.cache), "Disable the response cache", false);
  o.add_flag(app, "--lenient-fixtures", IDIOMFORGE_FIELD(provider.strict_fixtures),
             "Mock answers unknown prompts with an empty string", false);
  o.add_flag(app, "--strict", IDIOMFORGE_FIELD(strict), "Exit 1 if any record fails");
  o.add(app, "--templates", IDIOMFORGE_FIELD(templates), "Prompt template directory");
}

// ---------------------------------------------------------------------------

inline int run_pipeline(PipelineConfig c) {
  const fs::path out = c.out_dir;
  if (c.sentences.empty()) throw ConfigError("pipeline needs paths.sentences");
  const auto source = LanguageCode::parse(c.source_lang);
  const auto target = LanguageCode::parse(c.target_lang);
  const auto mode = parse_prompt_mode(c.mode);
  if (mode == PromptMode::KBCoT && c.idioms.empty() && c.kb.empty()) {
    throw ConfigError("kb-cot needs paths.idioms to distill or paths.kb to read meanings from");
  }
  fs::create_directories(out);
  RunLog log("pipeline", to_yaml(c));
  ProviderSession session(c);
  std::size_t record_failures = 0;

  std::optional<KnowledgeBase> kb;
  if (!c.idioms.empty()) {
    auto idioms = stage_ingest({c.idioms}, c.idioms_format, source, c.dataset_name,
                               (out / "idioms.jsonl").string());
    log.stage("ingest", "idioms", std::to_string(idioms.idioms().size()));
    auto distilled = stage_distill(idioms, c, c.kb, (out / "kb.jsonl").string(), session.provider());
    log.stage("distill", "generated", std::to_string(distilled.report.generated));
    log.stage("distill", "failed", std::to_string(distilled.report.failed));
    record_failures += distilled.report.failed;
    kb = std::move(distilled.kb);
  } else if (!c.kb.empty()) {
    kb = load_kb(c.kb);
  }

  auto records = stage_translate(c, kb ? &*kb : nullptr, std::nullopt,
                                 (out / "translations.jsonl").string(), session.provider());
  log.stage("translate", "records", std::to_string(records.size()));
  record_failures += count_errors(records);

  auto evals = stage_judge(records, c, session.provider());
  log.stage("judge", "evals", std::to_string(evals.size()));
  if (!c.refs.empty()) {
    auto bleu = stage_bleu(records, load_references(c.refs), target, evals);
    write_text(out / "bleu.json", bleu_json(bleu, records.size()).dump(2) + "\n");
    log.stage("bleu", "score", fmt::format("{}", bleu.score));
  }
  write_evals(evals, (out / "evals.jsonl").string());
  record_failures += count_errors(evals);

  report::Report rep;
  rep.aggregates = aggregates_of(evals, c.translate_model + " " + c.mode);
  if (!c.annotations.empty()) {
    rep.correlations = report::correlate(evals, report::load_annotations(c.annotations),
                                         default_metrics(evals), LanguagePair{source, target});
  }
  write_text(out / "report.json", report::render_json(rep));
  auto format = report::parse_format(c.report_format);
  auto ext = format == report::Format::Csv ? ".csv" : format == report::Format::Json ? ".rendered.json" : ".txt";
  write_text(out / (std::string("report") + ext), report::render_report(rep, format));

  session.finish();
  log.counters(session.counters());
  log.write(out);
  return finish_status(session.counters(), record_failures, c.strict);
}

inline int run(int argc, char** argv) {
  CLI::App app{"Idiom knowledge distillation and idiomatic translation toolkit", "idiomforge"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  std::function<int()> action;
  std::vector<std::unique_ptr<Overrides>> keep;
  auto overrides = [&]() -> Overrides& { return *keep.emplace_back(std::make_unique<Overrides>()); };

  // ingest
  {
    auto* cmd = app.add_subcommand("ingest", "Normalize and merge idiom lists");
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto opts = std::make_shared<std::array<std::string, 4>>(
        std::array<std::string, 4>{"lines", "", "", ""});  // format, lang, dataset, out
    cmd->add_option("inputs", *inputs, "Idiom list files")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", (*opts)[0], "lines | csv[:col] | tsv[:col] | jsonl[:field]")
        ->capture_default_str();
    cmd->add_option("--lang", (*opts)[1], "Idiom language (En, Zh, Ja)")->required();
    cmd->add_option("--dataset-name", (*opts)[2], "Source name recorded per idiom");
    cmd->add_option("--out", (*opts)[3], "Output idioms JSONL")->required();
    cmd->callback([&, cmd, inputs, opts] {
      action = [cmd, inputs, opts] {
        stage_ingest(*inputs, (*opts)[0], LanguageCode::parse((*opts)[1]), (*opts)[2], (*opts)[3]);
        RunLog("ingest", options_yaml(*cmd)).write(dir_of((*opts)[3]));
        return kExitOk;
      };
    });
  }

  // distill
  {
    auto* cmd = app.add_subcommand("distill", "Generate idiom meanings into a knowledge base");
    auto& o = overrides();
    o.add(cmd, "--idioms", IDIOMFORGE_FIELD(idioms), "Idioms JSONL from ingest")->required();
    o.add(cmd, "--idiom-lang", IDIOMFORGE_FIELD(source_lang), "Idiom language");
    o.add(cmd, "--meaning-lang", IDIOMFORGE_FIELD(meaning_lang), "Meaning language (default En)");
    o.add(cmd, "--model", IDIOMFORGE_FIELD(distill_model), "Model that writes meanings");
    o.add(cmd, "--exemplars", IDIOMFORGE_FIELD(exemplars), "Few-shot exemplar JSONL");
    o.add(cmd, "--kb", IDIOMFORGE_FIELD(kb), "Knowledge base JSONL (read if present, then written)")
        ->required();
    o.add_flag(cmd, "--refresh", IDIOMFORGE_FIELD(refresh), "Regenerate existing entries");
    o.add_flag(cmd, "--zero-shot", IDIOMFORGE_FIELD(zero_shot), "Allow prompts without exemplars");
    o.add(cmd, "--created-at", IDIOMFORGE_FIELD(created_at), "RFC 3339 timestamp for new entries");
    add_provider_flags(o, cmd);
    cmd->callback([&, cmd, op = &o] {
      action = [cmd, op] {
        PipelineConfig c;
        c.meaning_lang = "En";
        op->apply(c);
        c.out_dir = dir_of(c.kb).string();
        auto lang = LanguageCode::parse(c.source_lang);
        auto idioms = ingest::load_idiom_set(c.idioms, lang);
        ProviderSession session(c);
        auto result = stage_distill(idioms, c, c.kb, c.kb, session.provider());
        session.finish();
        std::cout << fmt::format("generated {}, skipped {}, failed {}\n", result.report.generated,
                                 result.report.skipped_existing, result.report.failed);
        RunLog log("distill", options_yaml(*cmd));
        log.counters(session.counters());
        log.write(dir_of(c.kb));
        return finish_status(session.counters(), result.report.failed, c.strict);
      };
    });
  }

  // kb
  {
    auto* kb = app.add_subcommand("kb", "Inspect and combine knowledge bases");
    kb->require_subcommand(1);

    auto* st = kb->add_subcommand("stats", "Entry and idiom counts per language");
    auto stats_kb = std::make_shared<std::string>();
    auto stats_json = std::make_shared<bool>(false);
    st->add_option("--kb", *stats_kb, "Knowledge base JSONL")->required()->check(CLI::ExistingFile);
    st->add_flag("--json", *stats_json, "Print JSON");
    st->callback([&, stats_kb, stats_json] {
      action = [stats_kb, stats_json] {
        auto s = load_kb(*stats_kb).stats();
        if (*stats_json) {
          jsonl::ordered_json j = jsonl::ordered_json::object();
          for (const auto& [lang, ls] : s) j[lang.code()] = {{"entries", ls.entries}, {"idioms", ls.idioms}};
          std::cout << j.dump() << '\n';
        } else {
          for (const auto& [lang, ls] : s) {
            std::cout << fmt::format("{}\t{} entries\t{} idioms\n", lang.code(), ls.entries, ls.idioms);
          }
        }
        return kExitOk;
      };
    });

    auto* mg = kb->add_subcommand("merge", "Merge two knowledge bases; the second wins on conflicts");
    auto merge_in = std::make_shared<std::vector<std::string>>();
    auto merge_out = std::make_shared<std::string>();
    mg->add_option("inputs", *merge_in, "Two KB files")->required()->expected(2)->check(CLI::ExistingFile);
    mg->add_option("--out", *merge_out, "Merged KB")->required();
    mg->callback([&, mg, merge_in, merge_out] {
      action = [mg, merge_in, merge_out] {
        auto a = load_kb((*merge_in)[0]);
        auto replaced = a.merge(load_kb((*merge_in)[1]));
        save_kb(a, *merge_out);
        std::cout << fmt::format("{} entries, {} replaced\n", a.size(), replaced);
        RunLog log("kb merge", options_yaml(*mg));
        log.stage("merge", "replaced", std::to_string(replaced));
        log.write(dir_of(*merge_out));
        return kExitOk;
      };
    });

    auto* lk = kb->add_subcommand("lookup", "Look up one idiom's meaning");
    struct LookupArgs {
      std::string kb, idiom, idiom_lang, meaning_lang = "En", source_model;
      std::vector<std::string> prefer;
    };
    auto la = std::make_shared<LookupArgs>();
    lk->add_option("--kb", la->kb, "Knowledge base JSONL")->required()->check(CLI::ExistingFile);
    lk->add_option("--idiom", la->idiom, "Idiom")->required();
    lk->add_option("--idiom-lang", la->idiom_lang, "Idiom language")->required();
    lk->add_option("--meaning-lang", la->meaning_lang, "Meaning language")->capture_default_str();
    lk->add_option("--source-model", la->source_model, "Exact source model (disables fallback)");
    lk->add_option("--prefer", la->prefer, "Model preference order")->delimiter(',');
    lk->callback([&, la] {
      action = [la] {
        auto kbase = load_kb(la->kb);
        auto lang = LanguageCode::parse(la->idiom_lang);
        auto hit = kbase.lookup(ingest::normalize_idiom(la->idiom, lang), lang,
                                LanguageCode::parse(la->meaning_lang),
                                la->source_model.empty() ? std::nullopt
                                                         : std::optional<std::string>(la->source_model),
                                la->prefer);
        if (!hit) {
          std::cerr << "no meaning for idiom '" << la->idiom << "'\n";
          return kExitRecordFailures;
        }
        std::cout << wire::encode(*hit).dump() << '\n';
        return kExitOk;
      };
    });
  }

  // match
  {
    auto* cmd = app.add_subcommand("match", "Locate idioms in sentences");
    struct MatchArgs {
      std::string kb, lang, sentences, gold_field, text_field = "source_text", out;
      bool all = false, strict = false;
    };
    auto ma = std::make_shared<MatchArgs>();
    cmd->add_option("--kb", ma->kb, "Knowledge base supplying the lexicon")->check(CLI::ExistingFile);
    cmd->add_option("--lang", ma->lang, "Sentence language")->required();
    cmd->add_option("--sentences", ma->sentences, "Sentences JSONL {id, source_text, ...}")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--gold-field", ma->gold_field, "Use this field as the gold idiom instead of detection");
    cmd->add_option("--text-field", ma->text_field, "Sentence field")->capture_default_str();
    cmd->add_option("--out", ma->out, "Matches JSONL")->required();
    cmd->add_flag("--all-idioms", ma->all, "Emit every detected match, not only the primary one");
    cmd->add_flag("--strict", ma->strict, "Exit 1 if any sentence has no match");
    cmd->callback([&, cmd, ma] {
      action = [cmd, ma] {
        auto lang = LanguageCode::parse(ma->lang);
        std::optional<Lexicon> lexicon;
        if (ma->gold_field.empty()) {
          if (ma->kb.empty()) throw ConfigError("match needs --kb unless --gold-field is given");
          ingest::IdiomSet set(lang);
          for (const auto& idiom : load_kb(ma->kb).idioms(lang)) set.add(idiom, "kb");
          lexicon = Lexicon::build(set);
        }
        jsonl::Writer writer(ma->out);
        std::size_t misses = 0, written = 0;
        jsonl::for_each(ma->sentences, [&](const jsonl::json& obj, std::size_t line) {
          auto id = jsonl::require_string(obj, "id");
          auto sentence = unicode::nfc(jsonl::require_string(obj, ma->text_field.c_str()));
          std::vector<IdiomMatch> found;
          if (lexicon) {
            auto all = find_idioms(sentence, *lexicon);
            if (ma->all) {
              found = all;
            } else if (auto primary = select_primary(all)) {
              found.push_back(*primary);
            }
          } else {
            try {
              found.push_back(pair_gold(sentence, jsonl::require_string(obj, ma->gold_field.c_str())));
            } catch (const InvalidArgument& e) {
              spdlog::warn("line {}: {}", line, e.what());
            }
          }
          if (found.empty()) ++misses;
          for (const auto& m : found) {
            jsonl::ordered_json j;
            j["id"] = id;
            auto encoded = wire::encode(m);
            for (auto& [k, v] : encoded.items()) j[k] = v;
            writer.write(j);
            ++written;
          }
        });
        spdlog::info("match: {} matches, {} sentences without a match", written, misses);
        RunLog log("match", options_yaml(*cmd));
        log.stage("match", "unmatched", std::to_string(misses));
        log.write(dir_of(ma->out));
        return (ma->strict && misses > 0) ? kExitRecordFailures : kExitOk;
      };
    });
  }

  // translate
  {
    auto* cmd = app.add_subcommand("translate", "Translate sentences with Direct, KB-CoT or Self-CoT prompts");
    auto& o = overrides();
    auto out = std::make_shared<std::string>();
    o.add(cmd, "--dataset", IDIOMFORGE_FIELD(sentences), "Sentences JSONL {id, source_text, idiom}")
        ->required();
    o.add(cmd, "--idiom-field", IDIOMFORGE_FIELD(idiom_field), "Field holding the gold idiom");
    cmd->add_option("--out", *out, "Translation records JSONL")->required();
    o.add(cmd, "--mode", IDIOMFORGE_FIELD(mode), "direct, kb-cot or self-cot")
        ->check(CLI::IsMember({"direct", "kb-cot", "self-cot"}));
    o.add(cmd, "--source-lang", IDIOMFORGE_FIELD(source_lang), "Source language");
    o.add(cmd, "--target-lang", IDIOMFORGE_FIELD(target_lang), "Target language");
    o.add(cmd, "--prompt-lang", IDIOMFORGE_FIELD(prompt_lang), "Prompt language");
    o.add(cmd, "--meaning-lang", IDIOMFORGE_FIELD(meaning_lang), "Meaning language (default: target)");
    o.add(cmd, "--kb", IDIOMFORGE_FIELD(kb), "Knowledge base for kb-cot");
    o.add(cmd, "--model", IDIOMFORGE_FIELD(translate_model), "Translator model");
    o.add(cmd, "--meaning-model", IDIOMFORGE_FIELD(distill_model),
          "Preferred KB source model when several exist");
    auto exact_model = std::make_shared<std::string>();
    cmd->add_option("--meaning-source-model", *exact_model, "Use only KB meanings from this model");
    o.add(cmd, "--sample", IDIOMFORGE_FIELD(sample), "Translate a seeded sample of N sentences (0: all)");
    o.add(cmd, "--seed", IDIOMFORGE_FIELD(seed), "Sampling seed");
    add_provider_flags(o, cmd);
    cmd->callback([&, cmd, op = &o, out, exact_model] {
      action = [cmd, op, out, exact_model] {
        PipelineConfig c;
        c.mode = "direct";
        op->apply(c);
        c.out_dir = dir_of(*out).string();
        std::optional<KnowledgeBase> kb;
        if (!c.kb.empty()) kb = load_kb(c.kb);
        ProviderSession session(c);
        auto records = stage_translate(
            c, kb ? &*kb : nullptr,
            exact_model->empty() ? std::nullopt : std::optional<std::string>(*exact_model), *out,
            session.provider());
        session.finish();
        RunLog log("translate", options_yaml(*cmd));
        log.counters(session.counters());
        log.write(dir_of(*out));
        return finish_status(session.counters(), count_errors(records), c.strict);
      };
    });
  }

  // judge
  {
    auto* cmd = app.add_subcommand("judge", "Score translations with the rubric judge");
    auto& o = overrides();
    auto records = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--records", *records, "Translation records JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", *out, "Eval records JSONL")->required();
    o.add(cmd, "--judge-model", IDIOMFORGE_FIELD(judge_model), "Judge model");
    o.add(cmd, "--shots", IDIOMFORGE_FIELD(shots), "Scored examples shown to the judge")
        ->check(CLI::NonNegativeNumber);
    o.add(cmd, "--examples", IDIOMFORGE_FIELD(judge_examples), "Judge example JSONL for --shots");
    add_provider_flags(o, cmd);
    cmd->callback([&, cmd, op = &o, records, out] {
      action = [cmd, op, records, out] {
        PipelineConfig c;
        op->apply(c);
        c.out_dir = dir_of(*out).string();
        auto recs = load_jsonl<TranslationRecord>(*records, wire::decode_translation_record);
        ProviderSession session(c);
        auto evals = stage_judge(recs, c, session.provider());
        session.finish();
        write_evals(evals, *out);
        RunLog log("judge", options_yaml(*cmd));
        log.counters(session.counters());
        log.write(dir_of(*out));
        return finish_status(session.counters(), count_errors(evals), c.strict);
      };
    });
  }

  // bleu
  {
    auto* cmd = app.add_subcommand("bleu", "Corpus and sentence BLEU against references");
    struct BleuArgs {
      std::string records, refs, target_lang, evals, out;
    };
    auto ba = std::make_shared<BleuArgs>();
    cmd->add_option("--records", ba->records, "Translation records JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--refs", ba->refs, "References JSONL {id, reference}")->required()->check(CLI::ExistingFile);
    cmd->add_option("--target-lang", ba->target_lang, "Tokenization language (default: from records)");
    cmd->add_option("--evals", ba->evals, "Existing eval records to extend")->check(CLI::ExistingFile);
    cmd->add_option("--out", ba->out, "Eval records JSONL with bleu_sentence");
    cmd->callback([&, cmd, ba] {
      action = [cmd, ba] {
        auto recs = load_jsonl<TranslationRecord>(ba->records, wire::decode_translation_record);
        if (recs.empty()) throw InvalidArgument("no translation records in " + ba->records);
        auto lang = ba->target_lang.empty() ? recs.front().target_lang : LanguageCode::parse(ba->target_lang);
        std::vector<EvalRecord> evals;
        if (!ba->evals.empty()) {
          evals = load_jsonl<EvalRecord>(ba->evals, wire::decode_eval_record);
        } else {
          for (const auto& r : recs) {
            EvalRecord e;
            e.record_id = r.id;
            e.pair = LanguagePair{r.source_lang, r.target_lang};
            evals.push_back(std::move(e));
          }
        }
        auto score = stage_bleu(recs, load_references(ba->refs), lang, evals);
        std::cout << bleu_json(score, recs.size()).dump() << '\n';
        if (!ba->out.empty()) {
          write_evals(evals, ba->out);
          RunLog log("bleu", options_yaml(*cmd));
          log.stage("bleu", "score", fmt::format("{}", score.score));
          log.write(dir_of(ba->out));
        }
        return kExitOk;
      };
    });
  }

  // correlate
  {
    auto* cmd = app.add_subcommand("correlate", "Correlate metric scores with human annotations");
    struct CorrArgs {
      std::string evals, annotations, out, pair, system = "system";
      std::vector<std::string> metrics;
    };
    auto ca = std::make_shared<CorrArgs>();
    cmd->add_option("--evals", ca->evals, "Eval records JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--annotations", ca->annotations, "Human annotations JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", ca->out, "Report JSON")->required();
    cmd->add_option("--metrics", ca->metrics, "judge,bleu_sentence (default: those present)")->delimiter(',');
    cmd->add_option("--pair", ca->pair, "Language pair for records that carry none, e.g. Zh->En");
    cmd->add_option("--system", ca->system, "System name for the score summary")->capture_default_str();
    cmd->callback([&, cmd, ca] {
      action = [cmd, ca] {
        auto evals = load_jsonl<EvalRecord>(ca->evals, wire::decode_eval_record);
        auto annotations = report::load_annotations(ca->annotations);
        std::vector<report::Metric> metrics;
        for (const auto& m : ca->metrics) metrics.push_back(report::parse_metric(m));
        if (metrics.empty()) metrics = default_metrics(evals);
        std::optional<LanguagePair> pair;
        if (!ca->pair.empty()) pair = LanguagePair::parse(ca->pair);
        report::Report rep{report::correlate(evals, annotations, metrics, pair),
                           aggregates_of(evals, ca->system)};
        write_text(ca->out, report::render_json(rep));
        RunLog("correlate", options_yaml(*cmd)).write(dir_of(ca->out));
        return kExitOk;
      };
    });
  }

  // report
  {
    auto* cmd = app.add_subcommand("report", "Render a correlation report");
    struct ReportArgs {
      std::string in, format = "text-table", out;
    };
    auto ra = std::make_shared<ReportArgs>();
    cmd->add_option("--in", ra->in, "Report JSON (or CSV)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", ra->format, "text-table, csv or json")
        ->capture_default_str()
        ->check(CLI::IsMember({"text-table", "csv", "json"}));
    cmd->add_option("--out", ra->out, "Output file (default: stdout)");
    cmd->callback([&, ra] {
      action = [ra] {
        auto text = read_text(ra->in);
        auto rep = fs::path(ra->in).extension() == ".csv" ? report::parse_report_csv(text)
                                                          : report::parse_report_json(text);
        auto rendered = report::render_report(rep, report::parse_format(ra->format));
        if (ra->out.empty()) {
          std::cout << rendered;
        } else {
          write_text(ra->out, rendered);
        }
        return kExitOk;
      };
    });
  }

  // pipeline
  {
    auto* cmd = app.add_subcommand("pipeline", "ingest -> distill -> translate -> judge -> correlate -> report");
    auto& o = overrides();
    auto config_path = std::make_shared<std::string>();
    cmd->add_option("--config", *config_path, "Pipeline YAML config")->check(CLI::ExistingFile);
    o.add(cmd, "--out-dir", IDIOMFORGE_FIELD(out_dir), "Artifact directory");
    o.add(cmd, "--mode", IDIOMFORGE_FIELD(mode), "direct, kb-cot or self-cot")
        ->check(CLI::IsMember({"direct", "kb-cot", "self-cot"}));
    o.add(cmd, "--prompt-lang", IDIOMFORGE_FIELD(prompt_lang), "Prompt language");
    o.add(cmd, "--meaning-lang", IDIOMFORGE_FIELD(meaning_lang), "Meaning language");
    o.add(cmd, "--sample", IDIOMFORGE_FIELD(sample), "Sample N sentences (0: all)");
    o.add(cmd, "--seed", IDIOMFORGE_FIELD(seed), "Sampling seed");
    o.add(cmd, "--shots", IDIOMFORGE_FIELD(shots), "Judge shots");
    o.add(cmd, "--created-at", IDIOMFORGE_FIELD(created_at), "RFC 3339 timestamp for KB entries");
    o.add_flag(cmd, "--refresh", IDIOMFORGE_FIELD(refresh), "Regenerate existing KB entries");
    o.add(cmd, "--format", IDIOMFORGE_FIELD(report_format), "Report format")
        ->check(CLI::IsMember({"text-table", "csv", "json"}));
    add_provider_flags(o, cmd);
    cmd->callback([&, op = &o, config_path] {
      action = [op, config_path] {
        PipelineConfig c;
        if (!config_path->empty()) apply_config_file(c, *config_path);
        op->apply(c);
        return run_pipeline(c);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("idiomforge"));
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    return action();
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
  } catch (const TransportError& e) {
    spdlog::error("transport error: {}", e.what());
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
  }
  return kExitConfig;
}

}  // namespace idiomforge::cli
