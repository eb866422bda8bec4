#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "progassist/error.hpp"
#include "progassist/text_document.hpp"

namespace progassist {

/// A contiguous replacement of old lines by new lines.
///
/// `old_start` is 1-based. For a pure insertion (no old lines) it names the
/// old line the new lines go in front of, so `line_count() + 1` appends.
/// The `*_missing_eol` flags mark that the last line of the respective side
/// is the unterminated final line of its document.
struct ChangeHunk {
  std::size_t old_start = 1;
  std::vector<std::string> old_lines;
  std::vector<std::string> new_lines;
  bool old_missing_eol = false;
  bool new_missing_eol = false;

  std::size_t old_len() const noexcept { return old_lines.size(); }
  std::size_t old_end() const noexcept { return old_start + old_lines.size(); }

  std::vector<Line> old_tokens() const { return as_tokens(old_lines, old_missing_eol); }
  std::vector<Line> new_tokens() const { return as_tokens(new_lines, new_missing_eol); }

  bool operator==(const ChangeHunk&) const = default;

  static std::vector<Line> as_tokens(const std::vector<std::string>& lines, bool missing_eol) {
    std::vector<Line> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out.push_back({lines[i], !(missing_eol && i + 1 == lines.size())});
    }
    return out;
  }
};

/// The modification set between two documents: sorted, non-overlapping hunks.
struct EditScript {
  std::vector<ChangeHunk> hunks;

  bool empty() const noexcept { return hunks.empty(); }
  bool operator==(const EditScript&) const = default;
};

/// Throws PARSE_ERROR if `script` breaks the ordering/shape invariants.
inline void check_script_shape(const EditScript& script) {
  for (std::size_t i = 0; i < script.hunks.size(); ++i) {
    const ChangeHunk& h = script.hunks[i];
    if (h.old_start == 0) {
      throw Error(Errc::kParseError, "hunk " + std::to_string(i + 1) + " has old_start 0");
    }
    if (h.old_lines.empty() && h.new_lines.empty()) {
      throw Error(Errc::kParseError, "hunk " + std::to_string(i + 1) + " is empty");
    }
    if ((h.old_missing_eol && h.old_lines.empty()) || (h.new_missing_eol && h.new_lines.empty())) {
      throw Error(Errc::kParseError,
                  "hunk " + std::to_string(i + 1) + " flags a missing newline on an empty side");
    }
    if (i > 0 && script.hunks[i - 1].old_end() > h.old_start) {
      throw Error(Errc::kParseError, "hunks " + std::to_string(i) + " and " +
                                         std::to_string(i + 1) + " overlap or are unsorted");
    }
  }
}

namespace detail {

enum class EditOp : std::uint8_t { kDelete, kInsert, kMatch };

// Cells above this use the prefix-trimming fallback.
inline constexpr std::size_t kMaxDiffCells = std::size_t{1} << 24;

/// Minimal indel path between token sequences, lexicographically smallest
/// under delete < insert < match. That rule places every change as early as
/// it can go, which is where the topmost-hunk tie break comes from.
inline std::vector<EditOp> shortest_edit_path(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
  std::size_t n = a.size();
  std::size_t m = b.size();

  // A shared trailing token is matched by the lexicographic rule, so the
  // common suffix never changes the result.
  std::size_t suffix = 0;
  while (suffix < n && suffix < m && a[n - 1 - suffix] == b[m - 1 - suffix]) ++suffix;
  n -= suffix;
  m -= suffix;

  std::size_t prefix = 0;
  if ((n + 1) * (m + 1) > kMaxDiffCells) {
    while (prefix < n && prefix < m && a[prefix] == b[prefix]) ++prefix;
  }

  std::vector<EditOp> path(prefix, EditOp::kMatch);
  const std::size_t rows = n - prefix + 1;
  const std::size_t cols = m - prefix + 1;
  // cost[i][j] = indel distance between a[prefix+i..n) and b[prefix+j..m).
  std::vector<std::uint32_t> cost(rows * cols);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return cost[i * cols + j]; };
  for (std::size_t i = rows; i-- > 0;) {
    for (std::size_t j = cols; j-- > 0;) {
      if (i + 1 == rows) {
        at(i, j) = static_cast<std::uint32_t>(cols - 1 - j);
      } else if (j + 1 == cols) {
        at(i, j) = static_cast<std::uint32_t>(rows - 1 - i);
      } else if (a[prefix + i] == b[prefix + j]) {
        at(i, j) = at(i + 1, j + 1);
      } else {
        at(i, j) = 1 + std::min(at(i + 1, j), at(i, j + 1));
      }
    }
  }

  std::size_t i = 0;
  std::size_t j = 0;
  while (i + 1 < rows || j + 1 < cols) {
    if (i + 1 < rows && at(i + 1, j) + 1 == at(i, j)) {
      path.push_back(EditOp::kDelete);
      ++i;
    } else if (j + 1 < cols && at(i, j + 1) + 1 == at(i, j)) {
      path.push_back(EditOp::kInsert);
      ++j;
    } else {
      path.push_back(EditOp::kMatch);
      ++i;
      ++j;
    }
  }
  path.insert(path.end(), suffix, EditOp::kMatch);
  return path;
}

/// Groups maximal runs of non-match ops into hunks.
inline EditScript hunks_from_path(const std::vector<EditOp>& path, const std::vector<Line>& a,
                                  const std::vector<Line>& b) {
  EditScript script;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  while (k < path.size()) {
    if (path[k] == EditOp::kMatch) {
      ++i;
      ++j;
      ++k;
      continue;
    }
    ChangeHunk hunk;
    hunk.old_start = i + 1;
    while (k < path.size() && path[k] != EditOp::kMatch) {
      if (path[k] == EditOp::kDelete) {
        hunk.old_lines.push_back(a[i].text);
        hunk.old_missing_eol = !a[i].terminated;
        ++i;
      } else {
        hunk.new_lines.push_back(b[j].text);
        hunk.new_missing_eol = !b[j].terminated;
        ++j;
      }
      ++k;
    }
    script.hunks.push_back(std::move(hunk));
  }
  return script;
}

inline std::size_t line_hash(const Line& line) noexcept {
  return std::hash<std::string>{}(line.text) * 2 + (line.terminated ? 1 : 0);
}

struct LineHash {
  std::size_t operator()(const Line& line) const noexcept { return line_hash(line); }
};

}  // namespace detail

/// Minimal line-based edit script turning `old_doc` into `new_doc`.
inline EditScript diff(const TextDocument& old_doc, const TextDocument& new_doc) {
  const std::vector<Line> a = old_doc.tokens();
  const std::vector<Line> b = new_doc.tokens();
  std::unordered_map<Line, std::uint32_t, detail::LineHash> ids;
  auto intern = [&](const std::vector<Line>& lines) {
    std::vector<std::uint32_t> out;
    out.reserve(lines.size());
    for (const Line& line : lines) {
      out.push_back(ids.try_emplace(line, static_cast<std::uint32_t>(ids.size())).first->second);
    }
    return out;
  };
  const std::vector<std::uint32_t> ia = intern(a);
  const std::vector<std::uint32_t> ib = intern(b);
  return detail::hunks_from_path(detail::shortest_edit_path(ia, ib), a, b);
}

/// Applies hunks (all in old-document coordinates) and validates each
/// hunk's old lines against `old_doc`.
inline TextDocument apply_edit(const EditScript& script, const TextDocument& old_doc) {
  check_script_shape(script);
  const std::vector<Line> old_tokens = old_doc.tokens();
  std::vector<Line> out;
  out.reserve(old_tokens.size());
  std::size_t cursor = 0;
  for (std::size_t n = 0; n < script.hunks.size(); ++n) {
    const ChangeHunk& h = script.hunks[n];
    const std::size_t begin = h.old_start - 1;
    const std::vector<Line> expected = h.old_tokens();
    bool ok = begin + expected.size() <= old_tokens.size();
    for (std::size_t k = 0; ok && k < expected.size(); ++k) {
      ok = old_tokens[begin + k] == expected[k];
    }
    if (!ok || begin > old_tokens.size()) {
      throw Error(Errc::kContextMismatch, "hunk " + std::to_string(n + 1) + " at old line " +
                                              std::to_string(h.old_start) +
                                              " does not match the document");
    }
    out.insert(out.end(), old_tokens.begin() + static_cast<std::ptrdiff_t>(cursor),
               old_tokens.begin() + static_cast<std::ptrdiff_t>(begin));
    const std::vector<Line> replacement = h.new_tokens();
    out.insert(out.end(), replacement.begin(), replacement.end());
    cursor = begin + expected.size();
  }
  out.insert(out.end(), old_tokens.begin() + static_cast<std::ptrdiff_t>(cursor), old_tokens.end());
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    if (!out[k].terminated) {
      throw Error(Errc::kContextMismatch,
                  "edit leaves an unterminated line before the end of the document");
    }
  }
  return TextDocument::from_lines(out);
}

/// Prefixes each line with "k|" (1-based); terminators are kept as-is.
inline std::string number_lines(const TextDocument& doc) {
  std::string out;
  const auto lines = doc.lines();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += std::to_string(i + 1);
    out += '|';
    out += lines[i];
    if (i + 1 < lines.size() || doc.has_final_newline()) out += '\n';
  }
  return out;
}

}  // namespace progassist
