#pragma once

#include <string>
#include <vector>

#include "progassist/conversation.hpp"

namespace testing_support {

/// One fixed conversation per sample type, targeting `format`.
inline progassist::Conversation golden_conversation(const std::string& type, progassist::EditFormat format) {
  using namespace progassist;
  const std::string old_code = "a = 1\nb = 2\nc = a + b\n";
  const std::string new_code = "i = 1\nj = 2\nk = i + j\n";
  std::vector<Message> m{Message::system()};
  if (type == "HC" || type == "HCU") {
    m.push_back(Message::history("a = 1\n"));
    m.push_back(Message::history("a = 1\nb = 2\n"));
  }
  m.push_back(Message::current(old_code, type == "HC" ? TargetAnnotation{Cursor{0}} : TargetAnnotation{}));
  if (type == "CU" || type == "HCU") m.push_back(Message::user("Please change variable names."));
  const RenderedEdit edit = render_edit(TextDocument(old_code), TextDocument(new_code), format);
  const bool chat = type == "CU" || type == "HCU";
  m.push_back(Message::assistant(edit, chat ? std::optional<std::string>("Renamed a, b, c.") : std::nullopt));
  return Conversation{std::move(m), {}};
}

inline const std::vector<std::string> kGoldenTypes = {"C", "HC", "CU", "HCU"};

}  // namespace testing_support
