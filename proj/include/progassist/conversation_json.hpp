#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "progassist/conversation.hpp"
#include "progassist/edit_formats.hpp"
#include "progassist/error.hpp"

// JSON message-list schema:
//   {"messages": [
//      {"role": "system|history|current|user|assistant",
//       "body": "...",                                    // non-assistant
//       "annotation": {"kind": "cursor", "offset": 3}     // current, optional
//                   | {"kind": "selection", "start": 1, "end": 4},
//       "code_change": {"format": "wf|ud|lc|sr", "payload": "..."},  // assistant, optional
//       "chat": "...",                                    // assistant, optional
//       "chat_first": false}                              // assistant, optional
//   ],
//   "archive": [ ...same message objects... ]}            // optional
// A bare array is accepted as the "messages" list.

namespace progassist {

inline void to_json(nlohmann::json& j, const RenderedEdit& e) {
  j = {{"format", std::string(format_name(e.format))}, {"payload", e.payload}};
}

inline void from_json(const nlohmann::json& j, RenderedEdit& e) {
  e.format = parse_format_name(j.at("format").get<std::string>());
  e.payload = j.at("payload").get<std::string>();
}

inline nlohmann::json annotation_to_json(const TargetAnnotation& ann) {
  if (const auto* c = std::get_if<Cursor>(&ann)) return {{"kind", "cursor"}, {"offset", c->offset}};
  if (const auto* s = std::get_if<Selection>(&ann)) {
    return {{"kind", "selection"}, {"start", s->start}, {"end", s->end}};
  }
  return {{"kind", "none"}};
}

inline TargetAnnotation annotation_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", "none");
  if (kind == "cursor") return Cursor{j.at("offset").get<std::size_t>()};
  if (kind == "selection") {
    return Selection{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
  }
  if (kind == "none") return std::monostate{};
  throw Error(Errc::kSchemaError, "unknown annotation kind '" + kind + "'");
}

inline void to_json(nlohmann::json& j, const Message& m) {
  j = nlohmann::json::object();
  j["role"] = std::string(role_name(m.role));
  if (m.role == Role::kAssistant) {
    if (m.code_change) j["code_change"] = *m.code_change;
    if (m.chat) j["chat"] = *m.chat;
    if (m.chat_first) j["chat_first"] = true;
  } else {
    j["body"] = m.body;
  }
  if (!std::holds_alternative<std::monostate>(m.annotation)) {
    j["annotation"] = annotation_to_json(m.annotation);
  }
}

inline void from_json(const nlohmann::json& j, Message& m) {
  m = Message{};
  m.role = parse_role(j.at("role").get<std::string>());
  m.body = j.value("body", "");
  if (j.contains("annotation")) m.annotation = annotation_from_json(j.at("annotation"));
  if (j.contains("code_change")) m.code_change = j.at("code_change").get<RenderedEdit>();
  if (j.contains("chat")) m.chat = j.at("chat").get<std::string>();
  m.chat_first = j.value("chat_first", false);
}

inline void to_json(nlohmann::json& j, const Conversation& c) {
  j = {{"messages", c.messages}};
  if (!c.archive.empty()) j["archive"] = c.archive;
}

inline void from_json(const nlohmann::json& j, Conversation& c) {
  c = Conversation{};
  if (j.is_array()) {
    c.messages = j.get<std::vector<Message>>();
    return;
  }
  c.messages = j.at("messages").get<std::vector<Message>>();
  if (j.contains("archive")) c.archive = j.at("archive").get<std::vector<Message>>();
}

/// Parses a conversation document, mapping JSON errors to SCHEMA_ERROR.
inline Conversation conversation_from_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<Conversation>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kSchemaError, e.what());
  }
}

}  // namespace progassist
