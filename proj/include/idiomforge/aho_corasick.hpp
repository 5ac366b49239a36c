#pragma once

// Aho-Corasick automaton over Unicode scalar values.

#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace idiomforge {

class AhoCorasick {
 public:
  struct Hit {
    std::size_t pattern;  // index in insertion order
    std::size_t end;      // exclusive, in scalar values
  };

  /// Returns the pattern's index; re-adding an existing pattern returns the
  /// original index. Empty patterns are ignored and return npos.
  std::size_t add(std::u32string_view pattern) {
    if (pattern.empty()) return npos;
    std::int32_t state = 0;
    for (char32_t c : pattern) {
      auto it = edges_.find(edge_key(state, c));
      if (it == edges_.end()) {
        auto next = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({});
        edges_.emplace(edge_key(state, c), next);
        nodes_[static_cast<std::size_t>(state)].children.push_back(c);
        state = next;
      } else {
        state = it->second;
      }
    }
    auto& node = nodes_[static_cast<std::size_t>(state)];
    if (node.pattern < 0) {
      node.pattern = static_cast<std::int32_t>(lengths_.size());
      node.depth = pattern.size();
      lengths_.push_back(pattern.size());
    }
    built_ = false;
    return static_cast<std::size_t>(node.pattern);
  }

  /// Computes failure and output links; O(total pattern length).
  void build() {
    std::queue<std::int32_t> queue;
    for (char32_t c : nodes_[0].children) {
      auto child = edges_.at(edge_key(0, c));
      nodes_[static_cast<std::size_t>(child)].fail = 0;
      queue.push(child);
    }
    while (!queue.empty()) {
      auto state = queue.front();
      queue.pop();
      auto& node = nodes_[static_cast<std::size_t>(state)];
      const auto& fail_node = nodes_[static_cast<std::size_t>(node.fail)];
      node.output = fail_node.pattern >= 0 ? node.fail : fail_node.output;
      for (char32_t c : node.children) {
        auto child = edges_.at(edge_key(state, c));
        nodes_[static_cast<std::size_t>(child)].fail = step(node.fail, c);
        queue.push(child);
      }
    }
    built_ = true;
  }

  /// Every occurrence of every pattern, in order of end position.
  std::vector<Hit> search(std::u32string_view text) const {
    std::vector<Hit> hits;
    if (!built_) return hits;
    std::int32_t state = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      state = step(state, text[i]);
      for (std::int32_t s = state; s > 0; s = nodes_[static_cast<std::size_t>(s)].output) {
        const auto& node = nodes_[static_cast<std::size_t>(s)];
        if (node.pattern >= 0) hits.push_back({static_cast<std::size_t>(node.pattern), i + 1});
      }
    }
    return hits;
  }

  std::size_t pattern_count() const noexcept { return lengths_.size(); }
  std::size_t pattern_length(std::size_t index) const { return lengths_.at(index); }
  bool built() const noexcept { return built_; }

  /// True iff `pattern` was added (exact, whole-pattern membership).
  bool contains(std::u32string_view pattern) const {
    if (pattern.empty()) return false;
    std::int32_t state = 0;
    for (char32_t c : pattern) {
      auto it = edges_.find(edge_key(state, c));
      if (it == edges_.end()) return false;
      state = it->second;
    }
    return nodes_[static_cast<std::size_t>(state)].pattern >= 0;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::int32_t fail = 0;
    std::int32_t output = 0;  // nearest terminal node on the failure chain, 0 if none
    std::int32_t pattern = -1;
    std::size_t depth = 0;
    std::vector<char32_t> children;
  };

  static std::uint64_t edge_key(std::int32_t state, char32_t c) {
    return (static_cast<std::uint64_t>(state) << 21) | static_cast<std::uint64_t>(c);
  }

  std::int32_t step(std::int32_t state, char32_t c) const {
    for (;;) {
      auto it = edges_.find(edge_key(state, c));
      if (it != edges_.end()) return it->second;
      if (state == 0) return 0;
      state = nodes_[static_cast<std::size_t>(state)].fail;
    }
  }

  std::vector<Node> nodes_{Node{}};
  std::unordered_map<std::uint64_t, std::int32_t> edges_;
  std::vector<std::size_t> lengths_;
  bool built_ = false;
};

}  // namespace idiomforge
