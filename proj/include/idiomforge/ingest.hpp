#pragma once

// Idiom list loading, normalization and multi-dataset merging.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "idiomforge/core.hpp"
#include "idiomforge/jsonl.hpp"
#include "idiomforge/unicode.hpp"

namespace idiomforge::ingest {

/// NFC, trimmed; whitespace runs collapse to one space for space-delimited
/// languages and are left alone otherwise. Case is preserved.
inline std::string normalize_idiom(std::string_view raw, const LanguageCode& lang) {
  auto cps = unicode::decode_utf8(unicode::nfc(raw));
  auto trimmed = unicode::trim(std::u32string_view(cps));
  std::u32string out;
  if (lang.space_delimited()) {
    bool in_space = false;
    for (char32_t c : trimmed) {
      if (unicode::is_white_space(c)) {
        in_space = true;
        continue;
      }
      if (in_space) out.push_back(U' ');
      in_space = false;
      out.push_back(c);
    }
  } else {
    out.assign(trimmed);
  }
  if (out.empty()) throw InvalidArgument("blank idiom");
  return unicode::encode_utf8(out);
}

class IdiomSet {
 public:
  explicit IdiomSet(LanguageCode lang) : lang_(std::move(lang)) {}

  const LanguageCode& lang() const noexcept { return lang_; }
  const std::vector<std::string>& idioms() const noexcept { return idioms_; }
  const std::map<std::string, std::set<std::string>>& provenance() const noexcept {
    return provenance_;
  }
  std::size_t size() const noexcept { return idioms_.size(); }
  bool empty() const noexcept { return idioms_.empty(); }
  bool contains(const std::string& idiom) const { return provenance_.count(idiom) > 0; }

  /// `idiom` must already be normalized. Returns true when it was new.
  bool add(const std::string& idiom, const std::string& source) {
    if (idiom.empty()) throw InvalidArgument("blank idiom");
    if (source.empty()) throw InvalidArgument("provenance tag is empty");
    auto [it, inserted] = provenance_.try_emplace(idiom);
    it->second.insert(source);
    if (inserted) idioms_.push_back(idiom);
    return inserted;
  }

  friend bool operator==(const IdiomSet&, const IdiomSet&) = default;

 private:
  LanguageCode lang_;
  std::vector<std::string> idioms_;
  std::map<std::string, std::set<std::string>> provenance_;
};

enum class FormatKind { PlainLines, Csv, Tsv, JsonLines };

struct InputFormat {
  FormatKind kind = FormatKind::PlainLines;
  std::size_t column = 0;       // Csv / Tsv, 0-based
  std::string field = "idiom";  // JsonLines
  bool skip_header = false;     // Csv / Tsv

  static InputFormat plain_lines() { return {}; }
  static InputFormat csv(std::size_t column) { return {FormatKind::Csv, column}; }
  static InputFormat tsv(std::size_t column) { return {FormatKind::Tsv, column}; }
  static InputFormat json_lines(std::string field) {
    return {FormatKind::JsonLines, 0, std::move(field)};
  }

  /// Accepts "lines", "csv[:col]", "tsv[:col]", "jsonl[:field]".
  static InputFormat parse(std::string_view spec) {
    auto colon = spec.find(':');
    std::string_view name = spec.substr(0, colon);
    std::optional<std::string> arg;
    if (colon != std::string_view::npos) arg = std::string(spec.substr(colon + 1));
    auto column = [&]() -> std::size_t {
      if (!arg) return 0;
      std::size_t pos = 0;
      unsigned long v = 0;
      try {
        v = std::stoul(*arg, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != arg->size()) throw ParseError("bad column index '" + *arg + "'");
      return v;
    };
    if (name == "lines" || name == "plain") return plain_lines();
    if (name == "csv") return csv(column());
    if (name == "tsv") return tsv(column());
    if (name == "jsonl") return json_lines(arg.value_or("idiom"));
    throw ParseError("unknown input format '" + std::string(spec) + "'");
  }
};

namespace detail {

struct Row {
  std::size_t line;
  std::vector<std::string> fields;
};

inline std::string read_utf8_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  if (!unicode::is_valid_utf8(text)) {
    std::size_t line = 1;
    std::istringstream lines(text);
    std::string l;
    while (std::getline(lines, l) && unicode::is_valid_utf8(l)) ++line;
    throw ParseError(path.string() + ": not valid UTF-8", line);
  }
  return text;
}

/// RFC 4180 records; quoted fields may span lines.
inline std::vector<Row> parse_csv(std::string_view text, const std::string& name) {
  std::vector<Row> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    Row row{line, {}};
    std::string field;
    bool row_done = false;
    while (!row_done) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        std::size_t open_line = line;
        ++i;
        for (;;) {
          if (i >= text.size()) throw ParseError(name + ": unterminated quoted field", open_line);
          char c = text[i++];
          if (c == '"') {
            if (i < text.size() && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          throw ParseError(name + ": unexpected character after closing quote", line);
        }
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"') throw ParseError(name + ": stray quote in unquoted field", line);
          field.push_back(text[i++]);
        }
      }
      row.fields.push_back(field);
      if (i < text.size() && text[i] == ',') {
        ++i;
      } else {
        if (i < text.size() && text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    bool blank = row.fields.size() == 1 && unicode::trim_ascii(row.fields[0]).empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<Row> parse_lines(std::string_view text, char sep) {
  std::vector<Row> rows;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view l = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!unicode::trim_ascii(l).empty()) {
      Row row{line, {}};
      if (sep == '\0') {
        row.fields.emplace_back(l);
      } else {
        std::size_t start = 0;
        for (;;) {
          auto t = l.find(sep, start);
          row.fields.emplace_back(l.substr(start, t == std::string_view::npos ? l.size() - start : t - start));
          if (t == std::string_view::npos) break;
          start = t + 1;
        }
      }
      rows.push_back(std::move(row));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return rows;
}

}  // namespace detail

/// Loads one dataset's idiom column. Order of first appearance is kept and
/// every idiom is tagged with `dataset_name`.
inline IdiomSet load_idiom_list(const std::filesystem::path& path, const InputFormat& format,
                                const LanguageCode& lang, const std::string& dataset_name) {
  const std::string name = path.string();
  IdiomSet set(lang);
  auto add = [&](std::string_view raw, std::size_t line) {
    try {
      set.add(normalize_idiom(raw, lang), dataset_name);
    } catch (const InvalidArgument& e) {
      throw ParseError(name + ": " + e.what(), line);
    }
  };

  if (format.kind == FormatKind::JsonLines) {
    jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t line) {
      add(jsonl::require_string(obj, format.field.c_str()), line);
    });
  } else {
    std::string text = detail::read_utf8_file(path);
    std::vector<detail::Row> rows;
    switch (format.kind) {
      case FormatKind::Csv: rows = detail::parse_csv(text, name); break;
      case FormatKind::Tsv: rows = detail::parse_lines(text, '\t'); break;
      default: rows = detail::parse_lines(text, '\0'); break;
    }
    bool skip = format.skip_header && format.kind != FormatKind::PlainLines;
    for (const auto& row : rows) {
      if (skip) {
        skip = false;
        continue;
      }
      if (format.column >= row.fields.size()) {
        throw ParseError(name + ": row has " + std::to_string(row.fields.size()) +
                             " column(s), need index " + std::to_string(format.column),
                         row.line);
      }
      add(row.fields[format.column], row.line);
    }
  }
  if (set.empty()) spdlog::warn("{}: no idioms loaded", name);
  return set;
}

/// Union in argument order; provenance sets are merged.
inline IdiomSet merge_idiom_sets(std::span<const IdiomSet> sets, const LanguageCode& lang) {
  IdiomSet merged(lang);
  for (const auto& s : sets) {
    if (s.lang() != lang) {
      throw InvalidArgument("cannot merge idiom sets of different languages (" +
                            s.lang().code() + " vs " + lang.code() + ")");
    }
    for (const auto& idiom : s.idioms()) {
      for (const auto& src : s.provenance().at(idiom)) merged.add(idiom, src);
    }
  }
  return merged;
}

inline jsonl::ordered_json encode(const IdiomSet& set, const std::string& idiom) {
  jsonl::ordered_json j;
  j["idiom"] = idiom;
  j["lang"] = set.lang().code();
  j["sources"] = set.provenance().at(idiom);
  return j;
}

inline void save_idiom_set(const IdiomSet& set, const std::filesystem::path& path) {
  jsonl::Writer out(path);
  for (const auto& idiom : set.idioms()) out.write(encode(set, idiom));
}

/// Reads the `{"idiom","lang","sources"}` file written by save_idiom_set.
inline IdiomSet load_idiom_set(const std::filesystem::path& path, const LanguageCode& lang) {
  IdiomSet set(lang);
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    if (LanguageCode::parse(jsonl::require_string(obj, "lang")) != lang) {
      throw ParseError("idiom language differs from " + lang.code());
    }
    auto idiom = normalize_idiom(jsonl::require_string(obj, "idiom"), lang);
    auto it = obj.find("sources");
    if (it == obj.end() || !it->is_array() || it->empty()) {
      throw ParseError("field \"sources\" must be a non-empty array");
    }
    for (const auto& src : *it) {
      if (!src.is_string()) throw ParseError("sources must be strings");
      set.add(idiom, src.get<std::string>());
    }
  });
  return set;
}

}  // namespace idiomforge::ingest
