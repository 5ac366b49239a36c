#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace idiomforge {

/// Applies `fn(item, index)` to every item on up to `parallelism` threads.
/// Results come back in input order. The first exception thrown by `fn` is
/// rethrown after all workers stop.
template <typename Range, typename Fn>
auto parallel_map(const Range& items, int parallelism, Fn fn) {
  using Item = decltype(*std::begin(items));
  using Result = std::invoke_result_t<Fn&, Item, std::size_t>;
  const std::size_t n = std::size(items);
  std::vector<std::optional<Result>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next++;
      if (i >= n) return;
      try {
        slots[i].emplace(fn(*(std::begin(items) + static_cast<std::ptrdiff_t>(i)), i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace idiomforge
