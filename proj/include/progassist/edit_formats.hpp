#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "progassist/edit_script.hpp"
#include "progassist/error.hpp"
#include "progassist/text_document.hpp"

namespace progassist {

/// Whole file, unified diff, location-and-change, search-and-replace.
enum class EditFormat { kWholeFile, kUnifiedDiff, kLocationChange, kSearchReplace };

inline constexpr std::array<EditFormat, 4> kAllEditFormats = {
    EditFormat::kWholeFile, EditFormat::kUnifiedDiff, EditFormat::kLocationChange,
    EditFormat::kSearchReplace};

inline std::string_view format_name(EditFormat f) {
  switch (f) {
    case EditFormat::kWholeFile: return "wf";
    case EditFormat::kUnifiedDiff: return "ud";
    case EditFormat::kLocationChange: return "lc";
    case EditFormat::kSearchReplace: return "sr";
  }
  return "wf";
}

inline EditFormat parse_format_name(std::string_view name) {
  for (EditFormat f : kAllEditFormats) {
    if (format_name(f) == name) return f;
  }
  throw Error(Errc::kInvalidArgument, "unknown edit format '" + std::string(name) + "'");
}

struct RenderedEdit {
  EditFormat format = EditFormat::kWholeFile;
  std::string payload;

  bool operator==(const RenderedEdit&) const = default;
};

inline constexpr int kUnifiedContext = 3;
inline constexpr std::string_view kNoNewlineMarker = "\\ No newline at end of file";
inline constexpr std::string_view kSearchFence = "<<<<<<< SEARCH";
inline constexpr std::string_view kDividerFence = "=======";
inline constexpr std::string_view kReplaceFence = ">>>>>>> REPLACE";
inline constexpr std::string_view kUnifiedOldLabel = "--- original";
inline constexpr std::string_view kUnifiedNewLabel = "+++ modified";

namespace detail {

inline void append_line(std::string& out, std::string_view prefix, const Line& line) {
  out += prefix;
  out += line.text;
  out += '\n';
  if (!line.terminated) {
    out += kNoNewlineMarker;
    out += '\n';
  }
}

/// Splits a payload into physical lines; a missing final newline is tolerated.
inline std::vector<std::string> payload_lines(std::string_view payload) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < payload.size()) {
    std::size_t nl = payload.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(payload.substr(start));
      break;
    }
    out.emplace_back(payload.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(std::string_view format, std::size_t line_no,
                                    const std::string& what) {
  throw Error(Errc::kParseError, std::string(format) + " payload line " +
                                     std::to_string(line_no) + ": " + what);
}

// ---------------------------------------------------------------- unified diff

inline std::string unified_range(std::size_t start, std::size_t count) {
  // Empty ranges name the line before them, as diff(1) does.
  std::size_t shown = count == 0 ? start - 1 : start;
  return count == 1 ? std::to_string(shown)
                    : std::to_string(shown) + "," + std::to_string(count);
}

inline std::string render_unified(const EditScript& script, const TextDocument& old_doc) {
  if (script.empty()) return {};
  const std::vector<Line> old_tokens = old_doc.tokens();
  const std::size_t n = old_tokens.size();
  const std::size_t context = kUnifiedContext;

  std::string out;
  out += kUnifiedOldLabel;
  out += '\n';
  out += kUnifiedNewLabel;
  out += '\n';

  std::ptrdiff_t delta = 0;  // new line number minus old line number so far
  std::size_t first = 0;
  while (first < script.hunks.size()) {
    std::size_t last = first;
    while (last + 1 < script.hunks.size() &&
           script.hunks[last + 1].old_start - script.hunks[last].old_end() <= 2 * context) {
      ++last;
    }
    const ChangeHunk& head = script.hunks[first];
    const ChangeHunk& tail = script.hunks[last];
    const std::size_t lead = std::min(context, head.old_start - 1);
    const std::size_t trail = std::min(context, n + 1 - tail.old_end());
    const std::size_t old_from = head.old_start - lead;  // 1-based
    const std::size_t old_to = tail.old_end() + trail;   // exclusive
    std::size_t old_count = old_to - old_from;
    std::size_t new_count = old_count;
    for (std::size_t k = first; k <= last; ++k) {
      new_count = new_count - script.hunks[k].old_lines.size() + script.hunks[k].new_lines.size();
    }
    const std::size_t new_from = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(old_from) + delta);

    out += "@@ -" + unified_range(old_from, old_count) + " +" + unified_range(new_from, new_count) +
           " @@\n";
    std::size_t pos = old_from;
    for (std::size_t k = first; k <= last; ++k) {
      const ChangeHunk& h = script.hunks[k];
      for (; pos < h.old_start; ++pos) append_line(out, " ", old_tokens[pos - 1]);
      for (const Line& line : h.old_tokens()) append_line(out, "-", line);
      for (const Line& line : h.new_tokens()) append_line(out, "+", line);
      pos = h.old_end();
      delta += static_cast<std::ptrdiff_t>(h.new_lines.size()) -
               static_cast<std::ptrdiff_t>(h.old_lines.size());
    }
    for (; pos < old_to; ++pos) append_line(out, " ", old_tokens[pos - 1]);
    first = last + 1;
  }
  return out;
}

inline EditScript parse_unified(std::string_view payload, const TextDocument& old_doc) {
  static const std::regex kHeader(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@.*$)");
  const std::vector<std::string> lines = payload_lines(payload);
  const std::vector<Line> old_tokens = old_doc.tokens();
  EditScript script;

  std::size_t i = 0;
  while (i < lines.size() && lines[i].rfind("@@", 0) != 0) {
    if (!(lines[i].rfind("---", 0) == 0 || lines[i].rfind("+++", 0) == 0 ||
          lines[i].rfind("diff ", 0) == 0 || lines[i].rfind("index ", 0) == 0 || lines[i].empty())) {
      parse_fail("ud", i + 1, "unexpected text before the first hunk header");
    }
    ++i;
  }

  while (i < lines.size()) {
    std::smatch m;
    if (!std::regex_match(lines[i], m, kHeader)) parse_fail("ud", i + 1, "malformed hunk header");
    const std::size_t header_line = i + 1;
    const std::size_t old_count = m[2].matched ? std::stoul(m[2].str()) : 1;
    const std::size_t new_count = m[4].matched ? std::stoul(m[4].str()) : 1;
    std::size_t old_pos = std::stoul(m[1].str());  // 1-based next old line
    if (old_count == 0) ++old_pos;
    if (old_pos == 0) parse_fail("ud", header_line, "old range starts at line 0");
    ++i;

    std::size_t seen_old = 0;
    std::size_t seen_new = 0;
    std::optional<ChangeHunk> open;
    // 'c', '-', '+': which kind of line a following no-newline marker applies to.
    char last_kind = 0;
    auto close_open = [&] {
      if (open) {
        script.hunks.push_back(std::move(*open));
        open.reset();
      }
    };
    auto expect_old = [&](const std::string& text, std::size_t at) {
      if (old_pos > old_tokens.size() || old_tokens[old_pos - 1].text != text) {
        throw Error(Errc::kContextMismatch, "ud payload line " + std::to_string(at) +
                                                " does not match old line " +
                                                std::to_string(old_pos));
      }
    };

    while (i < lines.size() && (seen_old < old_count || seen_new < new_count ||
                                (i < lines.size() && lines[i] == kNoNewlineMarker))) {
      const std::string& line = lines[i];
      const char tag = line.empty() ? ' ' : line[0];
      const std::string text = line.empty() ? std::string() : line.substr(1);
      if (line == kNoNewlineMarker) {
        if (last_kind == 0) parse_fail("ud", i + 1, "no-newline marker without a preceding line");
        if (last_kind == '+') {
          open->new_missing_eol = true;
        } else {
          if (old_pos - 1 != old_tokens.size() || old_tokens.back().terminated) {
            throw Error(Errc::kContextMismatch,
                        "ud payload line " + std::to_string(i + 1) +
                            ": old document's last line is not unterminated here");
          }
          if (last_kind == '-') open->old_missing_eol = true;
        }
        ++i;
        continue;
      }
      if (tag == ' ') {
        if (seen_old >= old_count || seen_new >= new_count) {
          parse_fail("ud", i + 1, "hunk body longer than its header says");
        }
        close_open();
        expect_old(text, i + 1);
        ++old_pos;
        ++seen_old;
        ++seen_new;
      } else if (tag == '-') {
        if (seen_old >= old_count) parse_fail("ud", i + 1, "too many removed lines");
        if (open && !open->new_lines.empty()) close_open();
        if (!open) open = ChangeHunk{old_pos, {}, {}, false, false};
        expect_old(text, i + 1);
        open->old_lines.push_back(text);
        ++old_pos;
        ++seen_old;
      } else if (tag == '+') {
        if (seen_new >= new_count) parse_fail("ud", i + 1, "too many added lines");
        if (!open) open = ChangeHunk{old_pos, {}, {}, false, false};
        open->new_lines.push_back(text);
        ++seen_new;
      } else {
        parse_fail("ud", i + 1, "unexpected line in hunk body");
      }
      last_kind = tag == ' ' ? 'c' : tag;
      ++i;
    }
    close_open();
    if (seen_old != old_count || seen_new != new_count) {
      parse_fail("ud", header_line, "hunk body shorter than its header says");
    }
  }
  // Context marked as the unterminated last line must stay so on both sides.
  check_script_shape(script);
  return script;
}

// --------------------------------------------------------- location-and-change

inline const std::regex& lc_header_regex() {
  static const std::regex kHeader(R"(^(\d+),(\d+) ([ca])$)");
  return kHeader;
}

inline bool lc_reserved(const std::string& text) {
  return text == kNoNewlineMarker || std::regex_match(text, lc_header_regex());
}

inline std::string render_location_change(const EditScript& script) {
  std::string out;
  for (const ChangeHunk& h : script.hunks) {
    if (h.old_lines.empty()) {
      const std::string after = std::to_string(h.old_start - 1);
      out += after + "," + after + " a\n";
    } else {
      out += std::to_string(h.old_start) + "," + std::to_string(h.old_end() - 1) + " c\n";
    }
    for (const Line& line : h.new_tokens()) {
      if (lc_reserved(line.text)) {
        throw Error(Errc::kUnrepresentable,
                    "line '" + line.text + "' would be read as LC grammar");
      }
      append_line(out, "", line);
    }
  }
  return out;
}

inline EditScript parse_location_change(std::string_view payload, const TextDocument& old_doc) {
  const std::vector<std::string> lines = payload_lines(payload);
  const std::vector<Line> old_tokens = old_doc.tokens();
  const std::size_t n = old_tokens.size();
  EditScript script;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::smatch m;
    if (lines[i] == kNoNewlineMarker) {
      if (script.hunks.empty() || script.hunks.back().new_lines.empty()) {
        parse_fail("lc", i + 1, "no-newline marker without a preceding line");
      }
      script.hunks.back().new_missing_eol = true;
      continue;
    }
    if (std::regex_match(lines[i], m, lc_header_regex())) {
      const std::size_t a = std::stoul(m[1].str());
      const std::size_t b = std::stoul(m[2].str());
      ChangeHunk h;
      if (m[3].str() == "a") {
        if (a != b || a > n) parse_fail("lc", i + 1, "insertion point out of range");
        h.old_start = a + 1;
      } else {
        if (a == 0 || a > b || b > n) parse_fail("lc", i + 1, "line range out of range");
        h.old_start = a;
        for (std::size_t k = a; k <= b; ++k) h.old_lines.push_back(old_tokens[k - 1].text);
        h.old_missing_eol = !old_tokens[b - 1].terminated;
      }
      script.hunks.push_back(std::move(h));
      continue;
    }
    if (script.hunks.empty()) parse_fail("lc", i + 1, "expected an entry header 'a,b c'");
    if (script.hunks.back().new_missing_eol) parse_fail("lc", i + 1, "line after no-newline marker");
    script.hunks.back().new_lines.push_back(lines[i]);
  }
  try {
    check_script_shape(script);
  } catch (const Error& e) {
    throw Error(Errc::kParseError, std::string("lc payload: ") + e.what());
  }
  return script;
}

// ---------------------------------------------------------- search-and-replace

/// Number of places `needle` occurs in `hay`, stopping at `limit`.
inline std::size_t count_occurrences(const std::vector<Line>& hay, const std::vector<Line>& needle,
                                     std::size_t limit, std::size_t* first_at = nullptr) {
  if (needle.empty()) {
    if (hay.empty()) {
      if (first_at) *first_at = 0;
      return 1;
    }
    return std::min(limit, hay.size() + 1);
  }
  std::size_t count = 0;
  for (std::size_t p = 0; p + needle.size() <= hay.size() && count < limit; ++p) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(p))) {
      if (count == 0 && first_at) *first_at = p;
      ++count;
    }
  }
  return count;
}

struct SearchBlock {
  std::size_t from = 0;  // 0-based, half-open window [from, to) of old tokens
  std::size_t to = 0;
  std::vector<Line> search;
  std::vector<Line> replace;
};

inline bool sr_reserved(const std::string& text) {
  return text == kSearchFence || text == kDividerFence || text == kReplaceFence ||
         text == kNoNewlineMarker;
}

inline std::string render_search_replace(const EditScript& script, const TextDocument& old_doc) {
  const std::vector<Line> old_tokens = old_doc.tokens();
  const std::size_t n = old_tokens.size();

  // Each group is a run of hunks [first, last] covered by one block.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t k = 0; k < script.hunks.size(); ++k) groups.emplace_back(k, k);

  std::vector<SearchBlock> blocks;
  for (bool merged = true; merged;) {
    merged = false;
    blocks.clear();
    for (const auto& [first, last] : groups) {
      const std::size_t lo = script.hunks[first].old_start - 1;
      const std::size_t hi = script.hunks[last].old_end() - 1;
      SearchBlock block;
      for (std::size_t ctx = 0;; ++ctx) {
        block.from = lo >= ctx ? lo - ctx : 0;
        block.to = std::min(n, hi + ctx);
        block.search.assign(old_tokens.begin() + static_cast<std::ptrdiff_t>(block.from),
                            old_tokens.begin() + static_cast<std::ptrdiff_t>(block.to));
        if (count_occurrences(old_tokens, block.search, 2) == 1) break;
        if (block.from == 0 && block.to == n) {
          throw Error(Errc::kSrAmbiguous, "search block for hunk " + std::to_string(first + 1) +
                                              " is not unique even with full context");
        }
      }
      std::size_t pos = block.from;
      for (std::size_t k = first; k <= last; ++k) {
        const ChangeHunk& h = script.hunks[k];
        for (; pos + 1 < h.old_start; ++pos) block.replace.push_back(old_tokens[pos]);
        for (const Line& line : h.new_tokens()) block.replace.push_back(line);
        pos = h.old_end() - 1;
      }
      for (; pos < block.to; ++pos) block.replace.push_back(old_tokens[pos]);
      blocks.push_back(std::move(block));
    }
    for (std::size_t g = 0; g + 1 < blocks.size(); ++g) {
      if (blocks[g].to > blocks[g + 1].from) {
        groups[g].second = groups[g + 1].second;
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(g) + 1);
        merged = true;
        break;
      }
    }
  }

  std::string out;
  for (const SearchBlock& block : blocks) {
    out += kSearchFence;
    out += '\n';
    for (const Line& line : block.search) {
      if (sr_reserved(line.text)) {
        throw Error(Errc::kUnrepresentable, "line '" + line.text + "' would be read as a fence");
      }
      append_line(out, "", line);
    }
    out += kDividerFence;
    out += '\n';
    for (const Line& line : block.replace) {
      if (sr_reserved(line.text)) {
        throw Error(Errc::kUnrepresentable, "line '" + line.text + "' would be read as a fence");
      }
      append_line(out, "", line);
    }
    out += kReplaceFence;
    out += '\n';
  }
  return out;
}

inline EditScript parse_search_replace(std::string_view payload, const TextDocument& old_doc) {
  const std::vector<std::string> lines = payload_lines(payload);
  const std::vector<Line> old_tokens = old_doc.tokens();
  std::vector<SearchBlock> blocks;

  enum class State { kOutside, kSearch, kReplace } state = State::kOutside;
  std::size_t block_line = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    switch (state) {
      case State::kOutside:
        if (line == kSearchFence) {
          blocks.emplace_back();
          block_line = i + 1;
          state = State::kSearch;
        } else if (!line.empty()) {
          parse_fail("sr", i + 1, "expected '<<<<<<< SEARCH'");
        }
        break;
      case State::kSearch:
      case State::kReplace: {
        std::vector<Line>& side = state == State::kSearch ? blocks.back().search
                                                          : blocks.back().replace;
        if (line == kNoNewlineMarker) {
          if (side.empty() || !side.back().terminated) {
            parse_fail("sr", i + 1, "no-newline marker without a preceding line");
          }
          side.back().terminated = false;
        } else if (state == State::kSearch && line == kDividerFence) {
          state = State::kReplace;
        } else if (state == State::kReplace && line == kReplaceFence) {
          state = State::kOutside;
        } else if (line == kSearchFence || line == kDividerFence || line == kReplaceFence) {
          parse_fail("sr", i + 1, "misplaced fence '" + line + "'");
        } else {
          if (!side.empty() && !side.back().terminated) {
            parse_fail("sr", i + 1, "line after no-newline marker");
          }
          side.push_back({line, true});
        }
        break;
      }
    }
  }
  if (state != State::kOutside) parse_fail("sr", block_line, "unterminated search/replace block");

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::size_t at = 0;
    const std::size_t count = count_occurrences(old_tokens, blocks[b].search, 2, &at);
    if (count == 0) {
      throw Error(Errc::kSrNotFound, "search block " + std::to_string(b + 1) + " not found");
    }
    if (count > 1) {
      throw Error(Errc::kSrAmbiguous,
                  "search block " + std::to_string(b + 1) + " matches more than once");
    }
    blocks[b].from = at;
    blocks[b].to = at + blocks[b].search.size();
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const SearchBlock& x, const SearchBlock& y) { return x.from < y.from; });
  std::vector<Line> result;
  std::size_t cursor = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].from < cursor) {
      throw Error(Errc::kParseError, "sr payload: search blocks overlap in the old document");
    }
    result.insert(result.end(), old_tokens.begin() + static_cast<std::ptrdiff_t>(cursor),
                  old_tokens.begin() + static_cast<std::ptrdiff_t>(blocks[b].from));
    result.insert(result.end(), blocks[b].replace.begin(), blocks[b].replace.end());
    cursor = blocks[b].to;
  }
  result.insert(result.end(), old_tokens.begin() + static_cast<std::ptrdiff_t>(cursor),
                old_tokens.end());
  for (std::size_t k = 0; k + 1 < result.size(); ++k) {
    if (!result[k].terminated) {
      throw Error(Errc::kParseError, "sr payload leaves an unterminated line mid-document");
    }
  }
  return diff(old_doc, TextDocument::from_lines(result));
}

}  // namespace detail

/// Serializes `script` (which must equal diff(old_doc, new_doc)) in `format`.
inline RenderedEdit render_edit(const EditScript& script, const TextDocument& old_doc,
                                const TextDocument& new_doc, EditFormat format) {
  switch (format) {
    case EditFormat::kWholeFile:
      return {format, new_doc.content()};
    case EditFormat::kUnifiedDiff:
      return {format, detail::render_unified(script, old_doc)};
    case EditFormat::kLocationChange:
      return {format, detail::render_location_change(script)};
    case EditFormat::kSearchReplace:
      return {format, detail::render_search_replace(script, old_doc)};
  }
  throw Error(Errc::kInvalidArgument, "unknown edit format");
}

inline RenderedEdit render_edit(const TextDocument& old_doc, const TextDocument& new_doc,
                                EditFormat format) {
  return render_edit(diff(old_doc, new_doc), old_doc, new_doc, format);
}

/// Inverse of render_edit against the same old document.
inline EditScript parse_edit(const RenderedEdit& rendered, const TextDocument& old_doc) {
  switch (rendered.format) {
    case EditFormat::kWholeFile:
      return diff(old_doc, TextDocument(rendered.payload));
    case EditFormat::kUnifiedDiff:
      return detail::parse_unified(rendered.payload, old_doc);
    case EditFormat::kLocationChange:
      return detail::parse_location_change(rendered.payload, old_doc);
    case EditFormat::kSearchReplace:
      return detail::parse_search_replace(rendered.payload, old_doc);
  }
  throw Error(Errc::kInvalidArgument, "unknown edit format");
}

inline TextDocument apply_rendered(const RenderedEdit& rendered, const TextDocument& old_doc) {
  return apply_edit(parse_edit(rendered, old_doc), old_doc);
}

}  // namespace progassist
