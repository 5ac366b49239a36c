#pragma once

// Completion providers and the machinery wrapped around them: request
// digests, the on-disk response cache, retry with backoff, rate limiting,
// a bounded in-flight count, and fixture-backed mocks for offline runs.

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "idiomforge/error.hpp"
#include "idiomforge/hash.hpp"
#include "idiomforge/jsonl.hpp"

namespace idiomforge {

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.7;
  int max_tokens = 256;
  std::string model;
  std::optional<std::vector<std::string>> stop;

  void validate() const {
    if (prompt.empty()) throw InvalidArgument("completion prompt is empty");
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
      throw InvalidArgument("temperature must lie in [0,2]");
    }
    if (max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
  }
};

struct CompletionResponse {
  std::string text;
  std::string model;
  bool cached = false;
  std::int64_t latency_ms = 0;
};

/// SHA-256 over the compact JSON array
/// [model, prompt, temperature, max_tokens, stop-or-null].
struct CacheKey {
  std::string digest;

  static std::string canonical_form(const CompletionRequest& r) {
    jsonl::json arr = jsonl::json::array();
    arr.push_back(r.model);
    arr.push_back(r.prompt);
    arr.push_back(r.temperature);
    arr.push_back(r.max_tokens);
    arr.push_back(r.stop ? jsonl::json(*r.stop) : jsonl::json(nullptr));
    return arr.dump();
  }

  static CacheKey of(const CompletionRequest& r) { return {sha256_hex(canonical_form(r))}; }

  friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

/// Key under which prompt-form fixtures are stored.
inline std::string prompt_digest(std::string_view prompt) { return sha256_hex(prompt); }

class Provider {
 public:
  virtual ~Provider() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Fixture-backed mock

class MockProvider final : public Provider {
 public:
  struct Options {
    bool strict = true;
    std::string sentinel = "";
  };

  MockProvider() = default;
  explicit MockProvider(Options options) : options_(std::move(options)) {}

  /// Throws InvalidArgument on a duplicate digest.
  void add_fixture(const std::string& digest, std::string text) {
    if (!fixtures_.emplace(digest, std::move(text)).second) {
      throw InvalidArgument("duplicate fixture digest " + digest);
    }
  }

  void add_prompt_fixture(std::string_view prompt, std::string text) {
    add_fixture(prompt_digest(prompt), std::move(text));
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    request.validate();
    auto digest = CacheKey::of(request).digest;
    {
      std::lock_guard lock(mutex_);
      traffic_.push_back(request);
    }
    ++calls_;
    auto it = fixtures_.find(digest);
    if (it == fixtures_.end()) it = fixtures_.find(prompt_digest(request.prompt));
    if (it == fixtures_.end()) {
      if (options_.strict) throw FixtureMissError(digest);
      return {options_.sentinel, request.model, false, 0};
    }
    return {it->second, request.model, false, 0};
  }

  std::size_t calls() const noexcept { return calls_; }
  std::size_t fixture_count() const noexcept { return fixtures_.size(); }

  std::vector<CompletionRequest> traffic() const {
    std::lock_guard lock(mutex_);
    return traffic_;
  }

 private:
  Options options_;
  std::map<std::string, std::string> fixtures_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mutex_;
  std::vector<CompletionRequest> traffic_;
};

/// Fixture file: JSONL of {"digest":…,"text":…} or {"prompt":…,"text":…}.
/// When both digest and prompt are present the digest is used.
inline std::unique_ptr<MockProvider> mock_from_fixtures(const std::filesystem::path& path,
                                                        MockProvider::Options options = {}) {
  auto mock = std::make_unique<MockProvider>(std::move(options));
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    auto text = jsonl::require_string(obj, "text");
    if (auto digest = jsonl::optional_string(obj, "digest")) {
      mock->add_fixture(*digest, text);
    } else if (auto prompt = jsonl::optional_string(obj, "prompt")) {
      mock->add_prompt_fixture(*prompt, text);
    } else {
      throw ParseError("fixture needs \"digest\" or \"prompt\"");
    }
  });
  return mock;
}

/// Answers every request through a callback; used as a scripted fake.
class FunctionProvider final : public Provider {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit FunctionProvider(Fn fn) : fn_(std::move(fn)) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    request.validate();
    {
      std::lock_guard lock(mutex_);
      call_times_.push_back(std::chrono::steady_clock::now());
    }
    ++calls_;
    return {fn_(request), request.model, false, 0};
  }

  std::size_t calls() const noexcept { return calls_; }
  std::vector<std::chrono::steady_clock::time_point> call_times() const {
    std::lock_guard lock(mutex_);
    return call_times_;
  }

 private:
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mutex_;
  std::vector<std::chrono::steady_clock::time_point> call_times_;
};

/// Passes requests through and remembers every answer so the session can be
/// written out as a fixture file and replayed by MockProvider.
class RecordingProvider final : public Provider {
 public:
  explicit RecordingProvider(Provider& inner) : inner_(inner) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    auto response = inner_.complete(request);
    std::lock_guard lock(mutex_);
    recorded_[CacheKey::of(request).digest] = {request.prompt, response.text};
    return response;
  }

  /// Written in digest order so the file does not depend on call order.
  void save(const std::filesystem::path& path) const {
    std::lock_guard lock(mutex_);
    jsonl::Writer out(path);
    for (const auto& [digest, entry] : recorded_) {
      jsonl::ordered_json j;
      j["digest"] = digest;
      j["prompt"] = entry.first;
      j["text"] = entry.second;
      out.write(j);
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return recorded_.size();
  }

 private:
  Provider& inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::pair<std::string, std::string>> recorded_;
};

// ---------------------------------------------------------------------------
// On-disk cache: <dir>/<first two hex digits>/<digest>.json

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const CacheKey& key) const {
    return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
  }

  std::optional<std::string> get(const CacheKey& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      auto j = jsonl::json::parse(buf.str());
      if (j.value("digest", "") != key.digest) return std::nullopt;
      return j.at("text").get<std::string>();
    } catch (const std::exception& e) {
      spdlog::warn("ignoring unreadable cache file {}: {}", path_for(key).string(), e.what());
      return std::nullopt;
    }
  }

  /// At temperature 0 the last write wins; otherwise the first persisted
  /// answer is kept.
  void put(const CacheKey& key, const CompletionRequest& request, const std::string& text) {
    auto final_path = path_for(key);
    std::filesystem::create_directories(final_path.parent_path());
    jsonl::ordered_json j;
    j["digest"] = key.digest;
    j["model"] = request.model;
    j["prompt"] = request.prompt;
    j["temperature"] = request.temperature;
    j["max_tokens"] = request.max_tokens;
    j["stop"] = request.stop ? jsonl::json(*request.stop) : jsonl::json(nullptr);
    j["text"] = text;

    static std::atomic<std::uint64_t> counter{0};
    auto tmp = final_path;
    tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
           "." + std::to_string(counter++);
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << j.dump() << '\n';
      if (!out) throw Error("cannot write cache file " + tmp.string());
    }
    std::error_code ec;
    if (request.temperature == 0.0) {
      std::filesystem::rename(tmp, final_path, ec);
    } else {
      std::filesystem::create_hard_link(tmp, final_path, ec);
      std::filesystem::remove(tmp);
      if (ec && std::filesystem::exists(final_path)) ec.clear();
    }
    if (ec) throw Error("cannot persist cache file " + final_path.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Retry, rate limiting, concurrency bound

struct Clock {
  using time_point = std::chrono::steady_clock::time_point;
  using duration = std::chrono::steady_clock::duration;

  std::function<time_point()> now = [] { return std::chrono::steady_clock::now(); };
  std::function<void(duration)> sleep = [](duration d) { std::this_thread::sleep_for(d); };
};

/// Exponential backoff with full jitter: the wait before retry k (k = 0, 1,
/// ...) is uniform in [0, base * factor^k].
struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base{1000};
  double factor = 2.0;

  std::chrono::milliseconds ceiling(int retry) const {
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(base.count()) * std::pow(factor, retry)));
  }
};

/// At most `rps` calls start inside any one-second window.
class RateLimiter {
 public:
  RateLimiter(double rps, Clock clock) : rps_(rps), clock_(std::move(clock)) {}

  void acquire() {
    if (rps_ <= 0) return;
    const auto window = std::chrono::seconds(1);
    const auto limit = static_cast<std::size_t>(std::max(1.0, std::floor(rps_)));
    std::unique_lock lock(mutex_);
    for (;;) {
      auto now = clock_.now();
      while (!starts_.empty() && now - starts_.front() >= window) starts_.pop_front();
      if (starts_.size() < limit) {
        starts_.push_back(now);
        return;
      }
      auto wait = starts_.front() + window - now;
      lock.unlock();
      clock_.sleep(wait);
      lock.lock();
    }
  }

 private:
  double rps_;
  Clock clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> starts_;
};

struct ProviderCounters {
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
  std::size_t provider_calls = 0;  // attempts that reached the wrapped provider
  std::size_t retries = 0;
  std::size_t failures = 0;
};

/// The provider every pipeline stage talks to: cache, then bounded
/// concurrency, rate limit and retries around a concrete provider.
class ProviderStack final : public Provider {
 public:
  struct Options {
    std::optional<std::filesystem::path> cache_dir;
    int parallelism = 4;
    double rps = 0;  // 0 = unlimited
    RetryPolicy retry;
    Clock clock;
  };

  ProviderStack(Provider& inner, Options options)
      : inner_(inner),
        options_(std::move(options)),
        slots_(std::max(1, options_.parallelism)),
        limiter_(options_.rps, options_.clock),
        rng_(std::random_device{}()) {
    if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    request.validate();
    ++requests_;
    const auto key = CacheKey::of(request);
    if (cache_) {
      if (auto text = cache_->get(key)) {
        ++cache_hits_;
        return {*text, request.model, true, 0};
      }
    }

    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    for (int attempt = 0;; ++attempt) {
      limiter_.acquire();
      ++provider_calls_;
      auto started = std::chrono::steady_clock::now();
      try {
        auto response = inner_.complete(request);
        response.cached = false;
        response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
        if (cache_) cache_->put(key, request, response.text);
        return response;
      } catch (const TransportError& e) {
        if (attempt + 1 >= options_.retry.max_attempts) {
          ++failures_;
          throw TransportError("giving up after " + std::to_string(attempt + 1) +
                               " attempts: " + e.what());
        }
        ++retries_;
        auto wait = jitter(options_.retry.ceiling(attempt));
        spdlog::debug("transient provider failure ({}); retrying in {} ms", e.what(),
                      wait.count());
        options_.clock.sleep(wait);
      } catch (...) {
        ++failures_;
        throw;
      }
    }
  }

  ProviderCounters counters() const {
    return {requests_, cache_hits_, provider_calls_, retries_, failures_};
  }

 private:
  std::chrono::milliseconds jitter(std::chrono::milliseconds ceiling) {
    std::lock_guard lock(rng_mutex_);
    std::uniform_int_distribution<std::int64_t> dist(0, ceiling.count());
    return std::chrono::milliseconds(dist(rng_));
  }

  Provider& inner_;
  Options options_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<1024> slots_;
  RateLimiter limiter_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<std::size_t> requests_{0}, cache_hits_{0}, provider_calls_{0}, retries_{0},
      failures_{0};
};

}  // namespace idiomforge
