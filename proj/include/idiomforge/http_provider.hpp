#pragma once

// Chat-completions style HTTP adapter. The wire schema lives only here.
//
//   POST <api_base>/chat/completions
//   {"model":…, "messages":[{"role":"user","content":<prompt>}],
//    "temperature":…, "max_tokens":…, "stop":[…]?}
//   -> {"choices":[{"message":{"content":…}}]}

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <string>

#include "idiomforge/provider.hpp"

namespace idiomforge {

struct HttpProviderConfig {
  std::string api_base;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::chrono::seconds timeout{60};

  /// Reads IDIOMFORGE_API_BASE and IDIOMFORGE_API_KEY.
  static HttpProviderConfig from_env() {
    HttpProviderConfig c;
    if (const char* v = std::getenv("IDIOMFORGE_API_BASE")) c.api_base = v;
    if (const char* v = std::getenv("IDIOMFORGE_API_KEY")) c.api_key = v;
    return c;
  }
};

class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.api_base.empty()) {
      throw ConfigError("HTTP provider needs an API base (IDIOMFORGE_API_BASE)");
    }
    auto scheme_end = config_.api_base.find("://");
    if (scheme_end == std::string::npos) {
      throw ConfigError("API base must include a scheme: " + config_.api_base);
    }
    auto path_start = config_.api_base.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      origin_ = config_.api_base;
    } else {
      origin_ = config_.api_base.substr(0, path_start);
      path_prefix_ = config_.api_base.substr(path_start);
    }
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }

  static std::string request_body(const CompletionRequest& request) {
    jsonl::ordered_json body;
    body["model"] = request.model;
    body["messages"] = jsonl::json::array({{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (request.stop) body["stop"] = *request.stop;
    return body.dump();
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    request.validate();
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto result = client.Post(path_prefix_ + "/chat/completions", headers,
                              request_body(request), "application/json");
    if (!result) {
      throw TransportError("HTTP request failed: " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 408 || status == 409 || status == 429 || status >= 500) {
      throw TransportError("provider returned HTTP " + std::to_string(status));
    }
    if (status != 200) {
      throw ProviderError("provider rejected request with HTTP " + std::to_string(status) +
                          ": " + result->body.substr(0, 200));
    }
    try {
      auto j = jsonl::json::parse(result->body);
      const auto& choice = j.at("choices").at(0);
      std::string text = choice.contains("message")
                             ? choice.at("message").at("content").get<std::string>()
                             : choice.at("text").get<std::string>();
      return {std::move(text), j.value("model", request.model), false, 0};
    } catch (const std::exception& e) {
      throw ProviderError(std::string("unexpected provider response: ") + e.what());
    }
  }

 private:
  HttpProviderConfig config_;
  std::string origin_;
  std::string path_prefix_;
};

}  // namespace idiomforge
