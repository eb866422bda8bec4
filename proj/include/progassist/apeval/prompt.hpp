#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "progassist/apeval/suite.hpp"
#include "progassist/conversation.hpp"
#include "progassist/edit_formats.hpp"
#include "progassist/error.hpp"
#include "progassist/llm/client.hpp"

namespace progassist::apeval {

enum class Adapter { kNative, kBaseFewShot, kInstructFewShot };

inline std::string_view adapter_name(Adapter a) {
  switch (a) {
    case Adapter::kNative: return "native";
    case Adapter::kBaseFewShot: return "base";
    case Adapter::kInstructFewShot: return "instruct";
  }
  return "native";
}

inline Adapter parse_adapter(std::string_view name) {
  if (name == "native") return Adapter::kNative;
  if (name == "base" || name == "base_fewshot") return Adapter::kBaseFewShot;
  if (name == "instruct" || name == "instruct_fewshot") return Adapter::kInstructFewShot;
  throw Error(Errc::kInvalidArgument, "unknown adapter '" + std::string(name) + "'");
}

namespace fewshot {

inline constexpr std::string_view kMessagesStart = "<|messages_start|>";
inline constexpr std::string_view kMessagesEnd = "<|messages_end|>";

inline constexpr std::string_view kHeader =
    "Read the following messages during programming and return the modified code in this format:\n"
    "\n"
    "<|next_start|>{modified code}<|next_end|>\n"
    "\n";

inline constexpr std::string_view kExampleMessages =
    "Programming process 1:\n"
    "```python\n"
    "a = 1\n"
    "b = 2\n"
    "c = a + b\n"
    "```\n"
    "\n"
    "Current code:\n"
    "```python\n"
    "i = 1\n"
    "b = 2\n"
    "c = a + b\n"
    "```\n"
    "\n"
    "User instruction:\n"
    "Please change variable names.";

inline constexpr std::string_view kExampleAnswer =
    "<|next_start|>```python\n"
    "i = 1\n"
    "j = 2\n"
    "k = i + j\n"
    "```<|next_end|>";

}  // namespace fewshot

inline std::string fenced(std::string_view code, std::string_view language) {
  std::string out = "```" + std::string(language) + "\n" + std::string(code);
  if (!code.empty() && code.back() != '\n') out += '\n';
  return out + "```";
}

/// The task's inputs as plain-text sections; absent elements are omitted.
inline std::string task_sections(const BenchTask& t) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < t.history.size(); ++i) {
    parts.push_back("Programming process " + std::to_string(i + 1) + ":\n" +
                    fenced(t.history[i].content(), t.language));
  }
  parts.push_back("Current code:\n" + fenced(annotate_target(t.current.content(), t.annotation), t.language));
  if (t.user) parts.push_back("User instruction:\n" + *t.user);
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "\n\n" : "") + parts[i];
  return out;
}

/// The task as an assistant conversation, up to the last input message.
inline Conversation task_conversation(const BenchTask& t) {
  Conversation conv;
  conv.messages.push_back(Message::system());
  for (const TextDocument& h : t.history) conv.messages.push_back(Message::history(h.content()));
  conv.messages.push_back(Message::current(t.current.content(), t.annotation));
  if (t.user) conv.messages.push_back(Message::user(*t.user));
  return conv;
}

/// What is sent for one task. Completion-style adapters produce a single
/// prompt text, sent as one user message; the instruct adapter produces turns.
struct PromptPayload {
  std::optional<std::string> text;
  std::vector<llm::ChatMessage> messages;

  std::vector<llm::ChatMessage> as_messages() const {
    if (text) return {{"user", *text}};
    return messages;
  }
};

inline PromptPayload render_prompt(const BenchTask& task, Adapter adapter,
                                   EditFormat format = EditFormat::kWholeFile) {
  PromptPayload p;
  switch (adapter) {
    case Adapter::kNative:
      p.text = render_template(task_conversation(task), format) + assistant_generation_prompt();
      break;
    case Adapter::kBaseFewShot:
      p.text = std::string(fewshot::kHeader) + std::string(fewshot::kMessagesStart) +
               std::string(fewshot::kExampleMessages) + std::string(fewshot::kMessagesEnd) + "\n\n" +
               std::string(fewshot::kExampleAnswer) + "\n\n" + std::string(fewshot::kHeader) +
               std::string(fewshot::kMessagesStart) + task_sections(task) + std::string(fewshot::kMessagesEnd);
      break;
    case Adapter::kInstructFewShot:
      p.messages = {{"user", std::string(fewshot::kHeader) + std::string(fewshot::kExampleMessages)},
                    {"assistant", std::string(fewshot::kExampleAnswer)},
                    {"user", std::string(fewshot::kHeader) + task_sections(task)}};
      break;
  }
  return p;
}

/// Removes one markdown fence wrapping the whole text, if there is one.
inline std::string strip_fence(std::string_view text) {
  const std::string t = trim(text);
  if (t.rfind("```", 0) != 0) return t;
  const std::size_t first_nl = t.find('\n');
  if (first_nl == std::string::npos) return t;
  if (t.size() < 3 || t.compare(t.size() - 3, 3, "```") != 0 || t.size() - 3 < first_nl) return t;
  std::string body = t.substr(first_nl + 1, t.size() - 3 - first_nl - 1);
  if (!body.empty() && body.back() == '\n') body.pop_back();
  return body;
}

/// Raw text between the next-start / next-end tokens, or nullopt.
inline std::optional<std::string> extract_payload(std::string_view output) {
  const std::size_t start = output.find(tokens::kNextStart);
  if (start == std::string_view::npos) return std::nullopt;
  std::string_view body = output.substr(start + tokens::kNextStart.size());
  const std::size_t end = body.find(tokens::kNextEnd);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(body.substr(0, end));
}

/// Candidate program from a model reply: the text between the next-start /
/// next-end tokens when present, else the whole reply, minus one fence.
inline std::string extract_code(std::string_view output) {
  std::string_view body = output;
  const std::size_t start = output.find(tokens::kNextStart);
  if (start != std::string_view::npos) {
    body = output.substr(start + tokens::kNextStart.size());
    const std::size_t end = body.find(tokens::kNextEnd);
    if (end != std::string_view::npos) body = body.substr(0, end);
  }
  std::string code = strip_fence(body);
  if (trim(code).empty()) throw Error(Errc::kEmptyCandidate, "model output holds no code");
  return code;
}

}  // namespace progassist::apeval
