#pragma once

// Declarative pipeline configuration. Precedence: flags > file > defaults.
// Relative paths in a file are resolved against the file's directory.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <yaml-cpp/yaml.h>

#include "idiomforge/core.hpp"
#include "idiomforge/error.hpp"

namespace idiomforge::cli {

namespace fs = std::filesystem;

inline std::string default_model() {
  if (const char* m = std::getenv("IDIOMFORGE_MODEL"); m && *m) return m;
  return "gpt-4";
}

struct ProviderSettings {
  std::string kind = "http";  // http | mock
  std::string fixtures;
  std::string record;
  int parallelism = 4;
  double rps = 0;
  bool cache = true;
  std::string cache_dir;  // empty: <out_dir>/cache
  bool strict_fixtures = true;
};

struct PipelineConfig {
  ProviderSettings provider;

  std::string distill_model = default_model();
  std::string translate_model = default_model();
  std::string judge_model = default_model();

  std::string source_lang = "Zh";
  std::string target_lang = "En";
  std::string prompt_lang = "En";
  std::string meaning_lang;  // empty: target_lang

  std::string idioms;
  std::string idioms_format = "lines";
  std::string dataset_name = "dataset";
  std::string exemplars;
  std::string kb;  // optional seed KB
  std::string sentences;
  std::string idiom_field = "idiom";
  std::string refs;
  std::string annotations;
  std::string judge_examples;
  std::string templates;
  std::string out_dir = "out";

  std::string mode = "kb-cot";
  std::size_t sample = 0;  // 0: every sentence
  std::uint64_t seed = 2023;
  int shots = 0;
  bool refresh = false;
  bool zero_shot = false;
  bool strict = false;
  std::string created_at;  // empty: epoch under mock, wall clock otherwise
  std::string report_format = "text-table";

  std::string effective_meaning_lang() const {
    return meaning_lang.empty() ? target_lang : meaning_lang;
  }

  std::string effective_cache_dir() const {
    return provider.cache_dir.empty() ? (fs::path(out_dir) / "cache").string() : provider.cache_dir;
  }
};

namespace detail {

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"provider", "models", "languages", "paths",
                                          "translate", "distill",  "judge",     "run"};
  return s;
}

template <typename T>
void read(const YAML::Node& section, const char* key, T& target) {
  if (section && section[key]) {
    try {
      target = section[key].as<T>();
    } catch (const YAML::Exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

inline void read_path(const YAML::Node& section, const char* key, const fs::path& base,
                      std::string& target) {
  std::string value;
  read(section, key, value);
  if (value.empty()) return;
  fs::path p(value);
  target = p.is_absolute() ? p.string() : (base / p).lexically_normal().string();
}

inline void check_keys(const YAML::Node& section, const std::string& name,
                       const std::set<std::string>& allowed) {
  if (!section) return;
  if (!section.IsMap()) throw ConfigError("config section '" + name + "' must be a mapping");
  for (const auto& kv : section) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + name + "." + key + "'");
  }
}

}  // namespace detail

/// Overlays a YAML file on `config`.
inline void apply_config_file(PipelineConfig& config, const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read config file " + path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config file must be a mapping: " + path.string());
  for (const auto& kv : root) {
    auto key = kv.first.as<std::string>();
    if (!detail::known_sections().count(key)) throw ConfigError("unknown config section '" + key + "'");
  }
  const fs::path base = fs::absolute(path).parent_path();
  using detail::read;
  using detail::read_path;

  auto p = root["provider"];
  detail::check_keys(p, "provider", {"kind", "fixtures", "record", "parallelism", "rps", "cache",
                                     "cache_dir", "strict_fixtures"});
  read(p, "kind", config.provider.kind);
  read_path(p, "fixtures", base, config.provider.fixtures);
  read_path(p, "record", base, config.provider.record);
  read(p, "parallelism", config.provider.parallelism);
  read(p, "rps", config.provider.rps);
  read(p, "cache", config.provider.cache);
  read_path(p, "cache_dir", base, config.provider.cache_dir);
  read(p, "strict_fixtures", config.provider.strict_fixtures);

  auto m = root["models"];
  detail::check_keys(m, "models", {"distill", "translate", "judge"});
  read(m, "distill", config.distill_model);
  read(m, "translate", config.translate_model);
  read(m, "judge", config.judge_model);

  auto l = root["languages"];
  detail::check_keys(l, "languages", {"source", "target", "prompt", "meaning"});
  read(l, "source", config.source_lang);
  read(l, "target", config.target_lang);
  read(l, "prompt", config.prompt_lang);
  read(l, "meaning", config.meaning_lang);

  auto paths = root["paths"];
  detail::check_keys(paths, "paths",
                     {"idioms", "exemplars", "kb", "sentences", "refs", "annotations",
                      "judge_examples", "templates", "out_dir"});
  read_path(paths, "idioms", base, config.idioms);
  read_path(paths, "exemplars", base, config.exemplars);
  read_path(paths, "kb", base, config.kb);
  read_path(paths, "sentences", base, config.sentences);
  read_path(paths, "refs", base, config.refs);
  read_path(paths, "annotations", base, config.annotations);
  read_path(paths, "judge_examples", base, config.judge_examples);
  read_path(paths, "templates", base, config.templates);
  read_path(paths, "out_dir", base, config.out_dir);

  auto d = root["distill"];
  detail::check_keys(d, "distill", {"idioms_format", "dataset_name", "refresh", "zero_shot"});
  read(d, "idioms_format", config.idioms_format);
  read(d, "dataset_name", config.dataset_name);
  read(d, "refresh", config.refresh);
  read(d, "zero_shot", config.zero_shot);

  auto t = root["translate"];
  detail::check_keys(t, "translate", {"mode", "sample", "seed", "idiom_field"});
  read(t, "mode", config.mode);
  read(t, "sample", config.sample);
  read(t, "seed", config.seed);
  read(t, "idiom_field", config.idiom_field);

  auto j = root["judge"];
  detail::check_keys(j, "judge", {"shots"});
  read(j, "shots", config.shots);

  auto r = root["run"];
  detail::check_keys(r, "run", {"strict", "created_at", "report_format"});
  read(r, "strict", config.strict);
  read(r, "created_at", config.created_at);
  read(r, "report_format", config.report_format);
}

/// The resolved configuration, every key spelled out, as YAML.
inline std::string to_yaml(const PipelineConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "provider" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.provider.kind;
  e << YAML::Key << "fixtures" << YAML::Value << c.provider.fixtures;
  e << YAML::Key << "record" << YAML::Value << c.provider.record;
  e << YAML::Key << "parallelism" << YAML::Value << c.provider.parallelism;
  e << YAML::Key << "rps" << YAML::Value << c.provider.rps;
  e << YAML::Key << "cache" << YAML::Value << c.provider.cache;
  e << YAML::Key << "cache_dir" << YAML::Value << c.effective_cache_dir();
  e << YAML::Key << "strict_fixtures" << YAML::Value << c.provider.strict_fixtures;
  e << YAML::EndMap;
  e << YAML::Key << "models" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "distill" << YAML::Value << c.distill_model;
  e << YAML::Key << "translate" << YAML::Value << c.translate_model;
  e << YAML::Key << "judge" << YAML::Value << c.judge_model;
  e << YAML::EndMap;
  e << YAML::Key << "languages" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "source" << YAML::Value << c.source_lang;
  e << YAML::Key << "target" << YAML::Value << c.target_lang;
  e << YAML::Key << "prompt" << YAML::Value << c.prompt_lang;
  e << YAML::Key << "meaning" << YAML::Value << c.effective_meaning_lang();
  e << YAML::EndMap;
  e << YAML::Key << "paths" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "idioms" << YAML::Value << c.idioms;
  e << YAML::Key << "exemplars" << YAML::Value << c.exemplars;
  e << YAML::Key << "kb" << YAML::Value << c.kb;
  e << YAML::Key << "sentences" << YAML::Value << c.sentences;
  e << YAML::Key << "refs" << YAML::Value << c.refs;
  e << YAML::Key << "annotations" << YAML::Value << c.annotations;
  e << YAML::Key << "judge_examples" << YAML::Value << c.judge_examples;
  e << YAML::Key << "templates" << YAML::Value << c.templates;
  e << YAML::Key << "out_dir" << YAML::Value << c.out_dir;
  e << YAML::EndMap;
  e << YAML::Key << "distill" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "idioms_format" << YAML::Value << c.idioms_format;
  e << YAML::Key << "dataset_name" << YAML::Value << c.dataset_name;
  e << YAML::Key << "refresh" << YAML::Value << c.refresh;
  e << YAML::Key << "zero_shot" << YAML::Value << c.zero_shot;
  e << YAML::EndMap;
  e << YAML::Key << "translate" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << c.mode;
  e << YAML::Key << "sample" << YAML::Value << c.sample;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "idiom_field" << YAML::Value << c.idiom_field;
  e << YAML::EndMap;
  e << YAML::Key << "judge" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "shots" << YAML::Value << c.shots;
  e << YAML::EndMap;
  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "strict" << YAML::Value << c.strict;
  e << YAML::Key << "created_at" << YAML::Value << c.created_at;
  e << YAML::Key << "report_format" << YAML::Value << c.report_format;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace idiomforge::cli
