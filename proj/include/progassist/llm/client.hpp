#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "progassist/error.hpp"

namespace progassist::llm {

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::int64_t> seed;
};

inline void validate(const ChatRequest& req) {
  if (req.messages.empty()) throw Error(Errc::kInvalidArgument, "chat request has no messages");
  const std::string& first = req.messages.front().role;
  if (first != "system" && first != "user") {
    throw Error(Errc::kInvalidArgument, "chat request must open with a system or user message");
  }
  if (!(req.temperature >= 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be >= 0");
  if (req.max_tokens <= 0) throw Error(Errc::kInvalidArgument, "max_tokens must be positive");
}

/// Chat-completions request body.
inline nlohmann::json to_wire(const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const ChatMessage& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  nlohmann::json body = {{"model", req.model_id},
                         {"messages", std::move(messages)},
                         {"temperature", req.temperature},
                         {"max_tokens", req.max_tokens}};
  if (req.seed) body["seed"] = *req.seed;
  return body;
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable cassette key over (model, messages, temperature, max_tokens, seed).
inline std::string request_digest(const ChatRequest& req) {
  // nlohmann::json orders object keys, so the dump is canonical.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_wire(req).dump())));
  return buf;
}

/// Pulls choices[0].message.content out of a chat-completions response.
inline std::string extract_content(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    throw Error(Errc::kMalformedResponse, "response has no choices");
  }
  const nlohmann::json& choice = j["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string()) {
    throw Error(Errc::kMalformedResponse, "choices[0].message.content missing");
  }
  return choice["message"]["content"].get<std::string>();
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

struct BackendConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 2;
  double backoff_base_s = 1.0;
  int max_in_flight = 4;
};

inline void validate(const BackendConfig& cfg) {
  if (!(cfg.timeout_s > 0)) throw Error(Errc::kInvalidArgument, "timeout must be positive");
  if (cfg.max_retries < 0) throw Error(Errc::kInvalidArgument, "max_retries must be >= 0");
  if (cfg.backoff_base_s < 0) throw Error(Errc::kInvalidArgument, "backoff must be >= 0");
  if (cfg.max_in_flight < 1) throw Error(Errc::kInvalidArgument, "max_in_flight must be >= 1");
}

/// Failure after the retry budget; carries what happened on the last attempt.
class LlmError : public Error {
 public:
  LlmError(Errc code, const std::string& detail, int attempts, int http_status = 0)
      : Error(code, detail + " (after " + std::to_string(attempts) + " attempt" +
                        (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts),
        http_status_(http_status) {}

  int attempts() const noexcept { return attempts_; }
  int http_status() const noexcept { return http_status_; }

 private:
  int attempts_;
  int http_status_;
};

/// Chat-completions over HTTP with exponential backoff on transient failures.
class HttpBackend : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  explicit HttpBackend(BackendConfig cfg, Sleeper sleeper = default_sleeper())
      : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {
    validate(cfg_);
    split_url();
  }

  std::string complete(const ChatRequest& req) override {
    validate(req);
    const std::string body = to_wire(req).dump();
    InFlightSlot slot(*this);

    Errc last_code = Errc::kTimeout;
    std::string last_detail;
    int last_status = 0;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        sleeper_(std::chrono::duration<double>(cfg_.backoff_base_s * std::pow(2.0, attempt - 1)));
      }
      httplib::Client client(scheme_host_port_);
      const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(cfg_.timeout_s));
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
      auto res = client.Post(path_, headers, body, "application/json");
      if (!res) {
        last_code = Errc::kTimeout;
        last_detail = "no response from " + cfg_.base_url + ": " + httplib::to_string(res.error());
        last_status = 0;
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        last_code = Errc::kHttpStatus;
        last_status = res->status;
        last_detail = "HTTP " + std::to_string(res->status);
        if (res->status == 429 || res->status >= 500) continue;
        throw LlmError(last_code, last_detail, attempt + 1, last_status);
      }
      try {
        return extract_content(res->body);
      } catch (const Error& e) {
        last_code = Errc::kMalformedResponse;
        last_detail = e.what();
        last_status = res->status;
      }
    }
    throw LlmError(last_code, last_detail, cfg_.max_retries + 1, last_status);
  }

  const BackendConfig& config() const noexcept { return cfg_; }

  static Sleeper default_sleeper() {
    return [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }

 private:
  struct InFlightSlot {
    explicit InFlightSlot(HttpBackend& b) : backend(b) {
      std::unique_lock lock(backend.mu_);
      backend.cv_.wait(lock, [&] { return backend.in_flight_ < backend.cfg_.max_in_flight; });
      ++backend.in_flight_;
    }
    ~InFlightSlot() {
      {
        std::lock_guard lock(backend.mu_);
        --backend.in_flight_;
      }
      backend.cv_.notify_one();
    }
    HttpBackend& backend;
  };

  void split_url() {
    const std::string& url = cfg_.base_url;
    const std::size_t scheme = url.find("://");
    const std::size_t path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    scheme_host_port_ = path_at == std::string::npos ? url : url.substr(0, path_at);
    std::string path = path_at == std::string::npos ? "" : url.substr(path_at);
    while (!path.empty() && path.back() == '/') path.pop_back();
    const std::string suffix = "/chat/completions";
    if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0) {
      path += suffix;
    }
    path_ = path;
  }

  BackendConfig cfg_;
  Sleeper sleeper_;
  std::string scheme_host_port_;
  std::string path_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

/// One-shot convenience over HttpBackend.
inline std::string complete(const ChatRequest& req, const BackendConfig& cfg) {
  HttpBackend backend(cfg);
  return backend.complete(req);
}

/// Backend answering through a callable; handy for scripted tests.
class FunctionBackend : public ChatBackend {
 public:
  explicit FunctionBackend(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& req) override { return fn_(req); }

 private:
  std::function<std::string(const ChatRequest&)> fn_;
};

}  // namespace progassist::llm
