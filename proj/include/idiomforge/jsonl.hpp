#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "idiomforge/error.hpp"
#include "idiomforge/unicode.hpp"

namespace idiomforge::jsonl {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Calls `fn(object, line_number)` for every non-blank line. Lines that are
/// not JSON objects raise ParseError carrying the 1-based line number.
inline void for_each(const std::filesystem::path& path,
                     const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (unicode::trim_ascii(line).empty()) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ": malformed JSON: " + e.what(), line_no);
    }
    if (!value.is_object()) {
      throw ParseError(path.string() + ": expected a JSON object", line_no);
    }
    try {
      fn(value, line_no);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(path.string() + ": " + e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write " + path.string());
  }

  template <typename Json>
  void write(const Json& value) {
    out_ << value.dump(-1, ' ', false, json::error_handler_t::strict) << '\n';
    if (!out_) throw Error("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline const std::string& require_string(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + field + "\"");
  if (!it->is_string()) throw ParseError(std::string("field \"") + field + "\" must be a string");
  return it->get_ref<const std::string&>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("field \"") + field + "\" must be a string");
  return it->get<std::string>();
}

inline std::optional<long long> optional_integer(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) {
    throw ParseError(std::string("field \"") + field + "\" must be an integer");
  }
  return it->get<long long>();
}

inline std::optional<double> optional_number(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("field \"") + field + "\" must be a number");
  return it->get<double>();
}

}  // namespace idiomforge::jsonl
