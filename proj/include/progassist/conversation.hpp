#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "progassist/edit_formats.hpp"
#include "progassist/edit_script.hpp"
#include "progassist/error.hpp"
#include "progassist/text_document.hpp"

namespace progassist {

namespace tokens {
inline constexpr std::string_view kImStart = "<|im_start|>";
inline constexpr std::string_view kImEnd = "<|im_end|>";
inline constexpr std::string_view kNextStart = "<|next_start|>";
inline constexpr std::string_view kNextEnd = "<|next_end|>";
inline constexpr std::string_view kTarget = "<|target|>";
inline constexpr std::string_view kTargetStart = "<|target_start|>";
inline constexpr std::string_view kTargetEnd = "<|target_end|>";

inline constexpr std::array<std::string_view, 7> kReserved = {
    kImStart, kImEnd, kNextStart, kNextEnd, kTarget, kTargetStart, kTargetEnd};
}  // namespace tokens

inline constexpr std::string_view kDefaultSystemPrompt = "You are a helpful programming assistant.";

enum class Role { kSystem, kHistory, kCurrent, kUser, kAssistant };

inline std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kHistory: return "history";
    case Role::kCurrent: return "current";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "system";
}

inline Role parse_role(std::string_view name) {
  for (Role r : {Role::kSystem, Role::kHistory, Role::kCurrent, Role::kUser, Role::kAssistant}) {
    if (role_name(r) == name) return r;
  }
  throw Error(Errc::kInvalidArgument, "unknown role '" + std::string(name) + "'");
}

struct Cursor {
  std::size_t offset = 0;
  bool operator==(const Cursor&) const = default;
};

struct Selection {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Selection&) const = default;
};

/// Where in the current code the programmer points. Offsets are UTF-8 byte offsets.
using TargetAnnotation = std::variant<std::monostate, Cursor, Selection>;

struct Message {
  Role role = Role::kUser;
  std::string body;
  TargetAnnotation annotation;             // current only
  std::optional<RenderedEdit> code_change;  // assistant only
  std::optional<std::string> chat;         // assistant only
  bool chat_first = false;                 // assistant: reasoning-style chat before code

  bool operator==(const Message&) const = default;

  static Message system(std::string body = std::string(kDefaultSystemPrompt)) {
    return {Role::kSystem, std::move(body), {}, std::nullopt, std::nullopt, false};
  }
  static Message history(std::string body) {
    return {Role::kHistory, std::move(body), {}, std::nullopt, std::nullopt, false};
  }
  static Message current(std::string body, TargetAnnotation ann = {}) {
    return {Role::kCurrent, std::move(body), ann, std::nullopt, std::nullopt, false};
  }
  static Message user(std::string body) {
    return {Role::kUser, std::move(body), {}, std::nullopt, std::nullopt, false};
  }
  static Message assistant(std::optional<RenderedEdit> code, std::optional<std::string> chat,
                           bool chat_first = false) {
    return {Role::kAssistant, {}, {}, std::move(code), std::move(chat), chat_first};
  }
};

/// Ordered messages for one request plus the archived user/assistant turns
/// that `promote` removed from the request view.
struct Conversation {
  std::vector<Message> messages;
  std::vector<Message> archive;

  bool operator==(const Conversation&) const = default;
};

struct OrderViolation {
  std::size_t index = 0;  // 1-based position of the first offending message
  std::string reason;
};

/// Accepts exactly S? H* C U? A?. With `allow_incomplete`, also accepts any
/// prefix of such a sequence (e.g. a lone system message).
inline std::optional<OrderViolation> validate_order(const Conversation& conv,
                                                    bool allow_incomplete = false) {
  // States: 0 start, 1 after S, 2 in H, 3 after C, 4 after U, 5 after A.
  int state = 0;
  for (std::size_t i = 0; i < conv.messages.size(); ++i) {
    const Role role = conv.messages[i].role;
    const std::size_t at = i + 1;
    int next = -1;
    switch (role) {
      case Role::kSystem: next = state == 0 ? 1 : -1; break;
      case Role::kHistory: next = state <= 2 ? 2 : -1; break;
      case Role::kCurrent: next = state <= 2 ? 3 : -1; break;
      case Role::kUser: next = state == 3 ? 4 : -1; break;
      case Role::kAssistant: next = (state == 3 || state == 4) ? 5 : -1; break;
    }
    if (next < 0) {
      return OrderViolation{at, std::string(role_name(role)) + " message not allowed here; "
                                    "expected order system? history* current user? assistant?"};
    }
    state = next;
  }
  if (!allow_incomplete && !conv.messages.empty() && state < 3) {
    return OrderViolation{conv.messages.size(), "conversation has no current message"};
  }
  return std::nullopt;
}

inline bool contains_reserved_token(std::string_view text) {
  return std::any_of(tokens::kReserved.begin(), tokens::kReserved.end(),
                     [&](std::string_view t) { return text.find(t) != std::string_view::npos; });
}

inline void check_no_reserved(std::string_view text, std::string_view where) {
  if (contains_reserved_token(text)) {
    throw Error(Errc::kSpecialTokenInBody, std::string(where) + " contains a reserved token");
  }
}

/// Inserts target tokens into `doc`; stripping them gives `doc` back.
inline std::string annotate_target(std::string_view doc, const TargetAnnotation& ann) {
  auto check = [&](std::size_t offset) {
    if (offset > doc.size()) {
      throw Error(Errc::kOutOfBounds, "offset " + std::to_string(offset) + " beyond length " +
                                          std::to_string(doc.size()));
    }
    if (offset < doc.size() && (static_cast<unsigned char>(doc[offset]) & 0xC0) == 0x80) {
      throw Error(Errc::kOutOfBounds,
                  "offset " + std::to_string(offset) + " splits a UTF-8 sequence");
    }
  };
  std::string out;
  if (const auto* cursor = std::get_if<Cursor>(&ann)) {
    check(cursor->offset);
    out.append(doc.substr(0, cursor->offset));
    out.append(tokens::kTarget);
    out.append(doc.substr(cursor->offset));
  } else if (const auto* sel = std::get_if<Selection>(&ann)) {
    check(sel->start);
    check(sel->end);
    if (sel->start > sel->end) {
      throw Error(Errc::kOutOfBounds, "selection start after end");
    }
    out.append(doc.substr(0, sel->start));
    out.append(tokens::kTargetStart);
    out.append(doc.substr(sel->start, sel->end - sel->start));
    out.append(tokens::kTargetEnd);
    out.append(doc.substr(sel->end));
  } else {
    out.assign(doc);
  }
  return out;
}

/// Removes every target token.
inline std::string strip_target_tokens(std::string_view text) {
  std::string out(text);
  for (std::string_view t : {tokens::kTargetStart, tokens::kTargetEnd, tokens::kTarget}) {
    for (std::size_t p; (p = out.find(t)) != std::string::npos;) out.erase(p, t.size());
  }
  return out;
}

/// The text between the im_start/im_end of an assistant turn.
inline std::string render_assistant_body(const Message& m) {
  if (!m.code_change && !m.chat) {
    throw Error(Errc::kInvalidArgument, "assistant message needs a code change or chat");
  }
  std::string code;
  if (m.code_change) {
    check_no_reserved(m.code_change->payload, "assistant code change");
    code.append(tokens::kNextStart);
    code.append(m.code_change->payload);
    code.append(tokens::kNextEnd);
  }
  std::string chat;
  if (m.chat) {
    check_no_reserved(*m.chat, "assistant chat");
    chat = *m.chat;
  }
  if (code.empty()) return chat;
  if (chat.empty()) return code;
  return m.chat_first ? chat + "\n" + code : code + "\n" + chat;
}

/// Body of a message as it appears inside the template.
inline std::string render_body(const Message& m, EditFormat format) {
  switch (m.role) {
    case Role::kAssistant:
      if (m.code_change && m.code_change->format != format) {
        throw Error(Errc::kFormatMismatch,
                    "assistant code change is " + std::string(format_name(m.code_change->format)) +
                        " but rendering as " + std::string(format_name(format)));
      }
      return render_assistant_body(m);
    case Role::kCurrent: {
      check_no_reserved(m.body, "current message body");
      std::string annotated = annotate_target(m.body, m.annotation);
      return format == EditFormat::kLocationChange ? number_lines(TextDocument(annotated))
                                                   : annotated;
    }
    default:
      check_no_reserved(m.body, std::string(role_name(m.role)) + " message body");
      return m.body;
  }
}

inline std::string render_message(const Message& m, EditFormat format) {
  std::string out;
  out.append(tokens::kImStart);
  out.append(role_name(m.role));
  out += '\n';
  out.append(render_body(m, format));
  out.append(tokens::kImEnd);
  out += '\n';
  return out;
}

/// ChatML-style rendering: one im_start/im_end block per message, in order.
/// Each message's text depends only on that message, so rendering is
/// append-only. Prefixes of a well-ordered conversation render too.
inline std::string render_template(const Conversation& conv,
                                   EditFormat format = EditFormat::kWholeFile) {
  if (auto bad = validate_order(conv, /*allow_incomplete=*/true)) {
    throw Error(Errc::kOrderViolation,
                "message " + std::to_string(bad->index) + ": " + bad->reason);
  }
  std::string out;
  for (const Message& m : conv.messages) out += render_message(m, format);
  return out;
}

/// Opening of the assistant turn, for prompting a model to continue.
inline std::string assistant_generation_prompt() {
  return std::string(tokens::kImStart) + "assistant\n";
}

struct AssistantParts {
  std::optional<std::string> code;
  std::optional<std::string> chat;

  bool operator==(const AssistantParts&) const = default;
};

inline std::string trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// Splits assistant text into the code payload and the remaining chat.
inline AssistantParts parse_assistant(std::string_view text) {
  const std::size_t start = text.find(tokens::kNextStart);
  const std::size_t end = text.find(tokens::kNextEnd);
  AssistantParts parts;
  if (start == std::string_view::npos && end == std::string_view::npos) {
    std::string chat = trim(text);
    if (!chat.empty()) parts.chat = std::move(chat);
    return parts;
  }
  if (start == std::string_view::npos || end == std::string_view::npos || end < start) {
    throw Error(Errc::kUnbalancedTokens, "next_start/next_end do not pair up");
  }
  const std::size_t body = start + tokens::kNextStart.size();
  parts.code = std::string(text.substr(body, end - body));
  std::string rest = std::string(text.substr(0, start)) +
                     std::string(text.substr(end + tokens::kNextEnd.size()));
  rest = trim(rest);
  if (!rest.empty()) parts.chat = std::move(rest);
  return parts;
}

/// Keeps the most recent `k` entries.
inline std::vector<Message> slide_window(const std::vector<Message>& history, std::size_t k) {
  const std::size_t keep = std::min(k, history.size());
  return {history.end() - static_cast<std::ptrdiff_t>(keep), history.end()};
}

/// Applies `slide_window` to the history block of a conversation.
inline Conversation window_history(const Conversation& conv, std::size_t k) {
  Conversation out;
  out.archive = conv.archive;
  std::vector<Message> history;
  for (const Message& m : conv.messages) {
    if (m.role == Role::kHistory) history.push_back(m);
  }
  history = slide_window(history, k);
  bool emitted = false;
  for (const Message& m : conv.messages) {
    if (m.role == Role::kHistory) {
      if (!emitted) out.messages.insert(out.messages.end(), history.begin(), history.end());
      emitted = true;
    } else {
      out.messages.push_back(m);
    }
  }
  return out;
}

/// Starts the next request: the old current becomes the newest history entry
/// and the old user/assistant turns move to the archive.
inline Conversation promote(const Conversation& conv, Message new_current) {
  if (new_current.role != Role::kCurrent) {
    throw Error(Errc::kInvalidArgument, "promote needs a current message");
  }
  Conversation out;
  out.archive = conv.archive;
  bool saw_current = false;
  for (const Message& m : conv.messages) {
    switch (m.role) {
      case Role::kSystem:
      case Role::kHistory:
        out.messages.push_back(m);
        break;
      case Role::kCurrent:
        out.messages.push_back(Message::history(m.body));
        saw_current = true;
        break;
      case Role::kUser:
      case Role::kAssistant:
        out.archive.push_back(m);
        break;
    }
  }
  if (!saw_current) {
    throw Error(Errc::kOrderViolation, "promote needs a conversation that reached current");
  }
  out.messages.push_back(std::move(new_current));
  return out;
}

}  // namespace progassist
