#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "progassist/error.hpp"

namespace progassist {

template <typename Id = std::string>
struct SizedItem {
  Id id;
  std::size_t length = 0;

  bool operator==(const SizedItem&) const = default;
};

template <typename Id = std::string>
struct Bin {
  std::size_t capacity = 0;
  std::vector<SizedItem<Id>> items;

  std::size_t used() const {
    std::size_t s = 0;
    for (const auto& it : items) s += it.length;
    return s;
  }
  std::size_t free() const { return capacity - used(); }

  bool operator==(const Bin&) const = default;
};

namespace detail {

template <typename Id>
std::string id_text(const Id& id) {
  if constexpr (std::is_convertible_v<Id, std::string>) {
    return std::string(id);
  } else {
    return std::to_string(id);
  }
}

}  // namespace detail

/// First-fit decreasing. Items are sorted by length descending, ties by id
/// ascending, so the result does not depend on input order.
template <typename Id>
std::vector<Bin<Id>> pack_ffd(std::vector<SizedItem<Id>> items, std::size_t capacity) {
  if (capacity == 0) throw Error(Errc::kInvalidArgument, "bin capacity must be positive");
  std::string oversize;
  for (const auto& it : items) {
    if (it.length > capacity) oversize += (oversize.empty() ? "" : ", ") + detail::id_text(it.id);
  }
  if (!oversize.empty()) {
    throw Error(Errc::kOversizeItem, "items longer than capacity " + std::to_string(capacity) + ": " + oversize);
  }
  std::sort(items.begin(), items.end(), [](const SizedItem<Id>& a, const SizedItem<Id>& b) {
    if (a.length != b.length) return a.length > b.length;
    return a.id < b.id;
  });
  std::vector<Bin<Id>> bins;
  std::vector<std::size_t> room;
  for (auto& it : items) {
    std::size_t b = 0;
    while (b < bins.size() && room[b] < it.length) ++b;
    if (b == bins.size()) {
      bins.push_back({capacity, {}});
      room.push_back(capacity);
    }
    room[b] -= it.length;
    bins[b].items.push_back(std::move(it));
  }
  return bins;
}

// Length counters: pure functions from rendered text to a token count.
using LengthCounter = std::function<std::size_t(std::string_view)>;

inline std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

inline std::size_t count_bytes(std::string_view text) { return text.size(); }

/// Runs `command` with the text on stdin and reads one integer from stdout,
/// for plugging in an external tokenizer.
inline LengthCounter subprocess_counter(std::string command) {
  return [command = std::move(command)](std::string_view text) -> std::size_t {
    namespace fs = std::filesystem;
    static std::atomic<unsigned> counter{0};
    const fs::path tmp = fs::temp_directory_path() /
                         ("progassist-count-" + std::to_string(::getpid()) + "-" +
                          std::to_string(counter.fetch_add(1)) + ".txt");
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    const std::string cmd = command + " < '" + tmp.string() + "'";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
      fs::remove(tmp);
      throw Error(Errc::kIo, "cannot run length counter '" + command + "'");
    }
    std::string output;
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    const int status = ::pclose(pipe);
    fs::remove(tmp);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(output, &pos);
    } catch (const std::exception&) {
      throw Error(Errc::kIo, "length counter '" + command + "' printed no integer");
    }
    if (status != 0) throw Error(Errc::kIo, "length counter '" + command + "' failed");
    return static_cast<std::size_t>(v);
  };
}

}  // namespace progassist
