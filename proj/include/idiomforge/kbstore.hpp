#pragma once

// The idiom knowledge base: entries keyed by
// (idiom, idiom_lang, meaning_lang, source_model) plus a secondary index
// from (idiom, idiom_lang) to the meanings available for it.
//
// Not internally synchronized: any number of concurrent readers, or one
// writer.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idiomforge/core.hpp"
#include "idiomforge/ingest.hpp"
#include "idiomforge/jsonl.hpp"
#include "idiomforge/wire.hpp"

namespace idiomforge {

struct LanguageStats {
  std::size_t entries = 0;
  std::size_t idioms = 0;
  friend bool operator==(const LanguageStats&, const LanguageStats&) = default;
};

using KBStats = std::map<LanguageCode, LanguageStats>;

class KnowledgeBase {
 public:
  using IndexKey = std::pair<std::string, LanguageCode>;
  using ModelsByMeaningLang = std::map<LanguageCode, std::set<std::string>>;

  /// Last writer wins. Returns true iff an entry with the same identity key
  /// was overwritten.
  bool upsert(KBEntry entry) {
    entry.validate();
    if (ingest::normalize_idiom(entry.idiom, entry.idiom_lang) != entry.idiom) {
      throw InvalidArgument("KB idiom '" + entry.idiom + "' is not normalized");
    }
    auto key = entry.key();
    index_[{key.idiom, key.idiom_lang}][key.meaning_lang].insert(key.source_model);
    auto [it, inserted] = entries_.insert_or_assign(std::move(key), std::move(entry));
    return !inserted;
  }

  /// Returns the number of entries of `other` that replaced existing ones.
  std::size_t merge(const KnowledgeBase& other) {
    std::size_t replaced = 0;
    for (const auto& [key, entry] : other.entries_) replaced += upsert(entry);
    return replaced;
  }

  const KBEntry* find(const KBKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  /// Meaning languages tried, in order: requested, English, the idiom's own.
  static std::vector<LanguageCode> fallback_chain(const LanguageCode& idiom_lang,
                                                  const LanguageCode& meaning_lang) {
    std::vector<LanguageCode> chain{meaning_lang};
    for (const auto& lang : {LanguageCode::En(), idiom_lang}) {
      if (std::find(chain.begin(), chain.end(), lang) == chain.end()) chain.push_back(lang);
    }
    return chain;
  }

  /// With `source_model`, an exact-key lookup. Without it, walks the
  /// fallback chain and, inside one meaning language, prefers models in
  /// `model_preference` order, then the lexicographically smallest model.
  std::optional<KBEntry> lookup(const std::string& idiom, const LanguageCode& idiom_lang,
                                const LanguageCode& meaning_lang,
                                const std::optional<std::string>& source_model = std::nullopt,
                                std::span<const std::string> model_preference = {}) const {
    if (source_model) {
      const KBEntry* e = find({idiom, idiom_lang, meaning_lang, *source_model});
      return e ? std::optional<KBEntry>(*e) : std::nullopt;
    }
    auto it = index_.find({idiom, idiom_lang});
    if (it == index_.end()) return std::nullopt;
    for (const auto& lang : fallback_chain(idiom_lang, meaning_lang)) {
      auto models = it->second.find(lang);
      if (models == it->second.end() || models->second.empty()) continue;
      const std::string* chosen = &*models->second.begin();
      for (const auto& preferred : model_preference) {
        if (models->second.count(preferred)) {
          chosen = &preferred;
          break;
        }
      }
      return *find({idiom, idiom_lang, lang, *chosen});
    }
    return std::nullopt;
  }

  KBStats stats() const {
    KBStats out;
    for (const auto& [key, entry] : entries_) ++out[key.idiom_lang].entries;
    for (const auto& [key, langs] : index_) ++out[key.second].idioms;
    return out;
  }

  /// Distinct idioms of one language, in key order.
  std::vector<std::string> idioms(const LanguageCode& lang) const {
    std::vector<std::string> out;
    for (const auto& [key, langs] : index_) {
      if (key.second == lang) out.push_back(key.first);
    }
    return out;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<KBKey, KBEntry>& entries() const noexcept { return entries_; }
  const std::map<IndexKey, ModelsByMeaningLang>& index() const noexcept { return index_; }

  /// Recomputes the index from the entries and compares.
  bool index_consistent() const {
    std::map<IndexKey, ModelsByMeaningLang> rebuilt;
    for (const auto& [key, entry] : entries_) {
      rebuilt[{key.idiom, key.idiom_lang}][key.meaning_lang].insert(key.source_model);
    }
    return rebuilt == index_;
  }

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::map<KBKey, KBEntry> entries_;
  std::map<IndexKey, ModelsByMeaningLang> index_;
};

/// Lines are written in identity-key order.
inline void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  jsonl::Writer out(path);
  for (const auto& [key, entry] : kb.entries()) out.write(wire::encode(entry));
}

inline KnowledgeBase load_kb(const std::filesystem::path& path) {
  KnowledgeBase kb;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t line) {
    auto entry = wire::decode_kb_entry(obj);
    if (kb.find(entry.key())) {
      throw ParseError(path.string() + ": duplicate KB entry for '" + entry.idiom + "' (" +
                           entry.idiom_lang.code() + "/" + entry.meaning_lang.code() + "/" +
                           entry.source_model + ")",
                       line);
    }
    kb.upsert(std::move(entry));
  });
  return kb;
}

}  // namespace idiomforge
