#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace progassist {

/// One physical line. Only the last line of a document may be unterminated.
struct Line {
  std::string text;
  bool terminated = true;

  bool operator==(const Line&) const = default;
};

/// Newline-normalized text with a line view.
///
/// CRLF and lone CR become LF on construction. `lines()` excludes terminators;
/// `has_final_newline()` records whether the last line carries one, so
/// joining `lines()` with '\n' (plus the final newline when set) gives back
/// `content()` byte for byte.
class TextDocument {
 public:
  TextDocument() = default;
  explicit TextDocument(std::string_view raw) : content_(normalize(raw)) { split(); }

  static TextDocument from_lines(std::span<const Line> lines) {
    std::string out;
    for (const Line& line : lines) {
      out += line.text;
      if (line.terminated) out += '\n';
    }
    return TextDocument(out);
  }

  const std::string& content() const noexcept { return content_; }
  std::span<const std::string> lines() const noexcept { return lines_; }
  std::size_t line_count() const noexcept { return lines_.size(); }
  bool empty() const noexcept { return content_.empty(); }
  bool has_final_newline() const noexcept {
    return !content_.empty() && content_.back() == '\n';
  }

  /// Lines with their terminator flag; the diff compares these.
  std::vector<Line> tokens() const {
    std::vector<Line> out;
    out.reserve(lines_.size());
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      out.push_back({lines_[i], i + 1 < lines_.size() || has_final_newline()});
    }
    return out;
  }

  /// Byte offset where 0-based line `index` starts; `line_count()` maps to the end.
  std::size_t line_offset(std::size_t index) const noexcept {
    return index < offsets_.size() ? offsets_[index] : content_.size();
  }

  bool operator==(const TextDocument& other) const noexcept {
    return content_ == other.content_;
  }

  static std::string normalize(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '\r') {
        out += '\n';
        if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
      } else {
        out += raw[i];
      }
    }
    return out;
  }

 private:
  void split() {
    std::size_t start = 0;
    while (start < content_.size()) {
      std::size_t nl = content_.find('\n', start);
      offsets_.push_back(start);
      if (nl == std::string::npos) {
        lines_.emplace_back(content_.substr(start));
        break;
      }
      lines_.emplace_back(content_.substr(start, nl - start));
      start = nl + 1;
    }
  }

  std::string content_;
  std::vector<std::string> lines_;
  std::vector<std::size_t> offsets_;
};

}  // namespace progassist
