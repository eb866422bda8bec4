#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "progassist/error.hpp"
#include "progassist/llm/client.hpp"

namespace progassist::llm {

/// Request digest -> response text, persisted as JSONL:
///   {"digest": "<16 hex>", "request": {...wire body...}, "response": "..."}
/// Appends go straight to disk. Access is serialized.
class Cassette {
 public:
  explicit Cassette(std::filesystem::path path, bool must_exist = true) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) {
      if (must_exist) throw Error(Errc::kIo, "cannot open cassette " + path_.string());
      return;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("digest") || !j.contains("response")) {
        throw Error(Errc::kSchemaError,
                    path_.string() + ":" + std::to_string(line_no) + ": bad cassette entry");
      }
      entries_[j["digest"].get<std::string>()] = j["response"].get<std::string>();
    }
  }

  std::optional<std::string> find(const std::string& digest) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const ChatRequest& req, const std::string& response) {
    const std::string digest = request_digest(req);
    std::lock_guard lock(mu_);
    if (entries_.count(digest)) return;
    entries_[digest] = response;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(Errc::kIo, "cannot append to cassette " + path_.string());
    nlohmann::json j = {{"digest", digest}, {"request", to_wire(req)}, {"response", response}};
    out << j.dump() << '\n';
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

enum class CassetteMode { kRecord, kReplay };

/// Forwards to a live backend and records every answer.
class RecordingBackend : public ChatBackend {
 public:
  RecordingBackend(std::shared_ptr<ChatBackend> live, std::filesystem::path path)
      : live_(std::move(live)), cassette_(std::move(path), /*must_exist=*/false) {}

  std::string complete(const ChatRequest& req) override {
    if (auto hit = cassette_.find(request_digest(req))) return *hit;
    std::string text = live_->complete(req);
    cassette_.put(req, text);
    return text;
  }

 private:
  std::shared_ptr<ChatBackend> live_;
  Cassette cassette_;
};

/// Serves only recorded answers; anything else is CASSETTE_MISS.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(std::filesystem::path path) : cassette_(std::move(path)) {}

  std::string complete(const ChatRequest& req) override {
    validate(req);
    const std::string digest = request_digest(req);
    if (auto hit = cassette_.find(digest)) return *hit;
    throw Error(Errc::kCassetteMiss, "no recorded response for request " + digest);
  }

 private:
  Cassette cassette_;
};

/// Wraps `live` for recording, or ignores it and replays.
inline std::shared_ptr<ChatBackend> record_replay(CassetteMode mode, const std::filesystem::path& path,
                                                  std::shared_ptr<ChatBackend> live = nullptr) {
  if (mode == CassetteMode::kRecord) {
    if (!live) throw Error(Errc::kInvalidArgument, "recording needs a live backend");
    return std::make_shared<RecordingBackend>(std::move(live), path);
  }
  return std::make_shared<ReplayBackend>(path);
}

}  // namespace progassist::llm
