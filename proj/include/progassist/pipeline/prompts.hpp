#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "progassist/error.hpp"
#include "progassist/pipeline/record.hpp"

namespace progassist::pipeline {

/// Replaces `{name}` for every name in `values` in a single left-to-right
/// pass; other braces (common in code) are left alone and inserted values
/// are never rescanned.
inline std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

namespace defaults {

inline constexpr std::string_view kPersonaNovice =
    "Please play the role of a novice programmer. You are required to write a piece of code. "
    "Simulate the real process of repeatedly adding, deleting, and modifying the code. Please "
    "return the code block after each step of editing. While writing the code, make some "
    "mistakes, such as incorrect logic or syntax errors, etc.\n";

inline constexpr std::string_view kPersonaOrdinary =
    "Please act as an ordinary programmer. Now, you need to write a piece of code. Please "
    "simulate the process of repeatedly adding, deleting, and modifying the code during the "
    "actual coding process. Please return the code block after each editing step. Try to "
    "simulate the coding process of an ordinary programmer as much as possible.\n";

inline constexpr std::string_view kPersonaExpert =
    "Please play the role of an expert programmer. You are now required to write a piece of "
    "code. Please simulate the process of repeatedly adding, deleting, and modifying code "
    "during the real coding process. Please return the code block after each step of editing. "
    "During the coding process, you should be as professional as possible.\n";

inline constexpr std::string_view kHistoryRequest =
    "The final code is:\n"
    "{code}\n"
    "Return every intermediate version as its own fenced code block, ending with the final code.\n";

inline constexpr std::string_view kJudgeSystem =
    "You are tasked with assisting a programmer by maintaining a record of the programming "
    "process, including potential future changes. Your role is to discern which changes the "
    "programmer desires you to propose proactively. These should align with their actual "
    "intentions and be helpful. To determine which changes align with a programmer's "
    "intentions, consider the following principles:\n"
    "\n"
    "1. **Understand the Context**: Assess the overall goal of the programming project. Ensure "
    "that any proposed change aligns with the project's objectives and the programmer's current "
    "focus.\n"
    "\n"
    "2. **Maintain Clear Communication**: Before proposing changes, ensure that your suggestions "
    "are clear and concise. This helps the programmer quickly understand the potential impact of "
    "each change.\n"
    "\n"
    "3. **Prioritize Stability**: Avoid proposing changes that could introduce instability or "
    "significant complexity unless there is a clear benefit. Stability is often more valued than "
    "optimization in the early stages of development.\n"
    "\n"
    "4. **Respect the Programmer's Preferences**: Pay attention to the programmer's coding style "
    "and preferences. Propose changes that enhance their style rather than contradict it.\n"
    "\n"
    "5. **Incremental Improvements**: Suggest changes that offer incremental improvements rather "
    "than drastic overhauls, unless specifically requested. This approach is less disruptive and "
    "easier for the programmer to integrate.\n"
    "\n"
    "6. **Consider Long-Term Maintenance**: Propose changes that improve code maintainability and "
    "readability. This includes refactoring for clarity, reducing redundancy, and enhancing "
    "documentation.\n"
    "\n"
    "7. **Balance Proactivity and Reactivity**: Be proactive in suggesting improvements that are "
    "likely to be universally beneficial (e.g., bug fixes, performance enhancements). However, be "
    "reactive, not proactive, in areas where the programmer's specific intentions are unclear or "
    "where personal preference plays a significant role.\n"
    "\n"
    "For each potential change, return `True` if suggesting this change would be beneficial to "
    "the programmer, return `False` if the change does not align with the programmer's "
    "intentions or if they do not want you to predict this change. Give your decision after "
    "analyzing each change. Provide your response in the following format:\n"
    "\n"
    "```\n"
    "**Analysis of change 1:**\n"
    "\n"
    "Your analysis here.\n"
    "\n"
    "**Decision:** `True` or `False`\n"
    "\n"
    "**Analysis of change 2:**\n"
    "\n"
    "Your analysis here.\n"
    "\n"
    "**Decision:** `True` or `False`\n"
    "\n"
    "...\n"
    "```\n";

inline constexpr std::string_view kJudgeUser =
    "{history_section}Current code:\n"
    "{current}\n"
    "\n"
    "{changes}";

inline constexpr std::string_view kInstructionSystem =
    "You are a programming assistant. The following content includes information related to "
    "your programming assistance, which may contain the record of the programming process, the "
    "current code, the git commit after all changes, relevant details about the problem, and "
    "your predicted modifications. Please generate an instruction for you to make the "
    "corresponding modifications, ensuring it resembles instructions typically given by a human "
    "programmer. The instruction may be detailed or concise and may or may not specify the "
    "location of the modification. Return the generated instruction in the following format:\n"
    "```\n"
    "**instruction:**\n"
    "{instruction}\n"
    "```\n";

inline constexpr std::string_view kInstructionUser =
    "{history_section}Current code:\n"
    "{current}\n"
    "\n"
    "{metadata_section}Predicted modifications:\n"
    "{target}\n";

inline constexpr std::string_view kChatSystem =
    "You are a programming assistant. The following content includes information related to "
    "your programming assistance, which may contain the record of the programming process, the "
    "current code, the user instruction, and your predicted modifications. Please provide the "
    "chat conversation for making the prediction. This may include analyzing the past "
    "programming process, speculating on the user's intent, and explaining the planning and "
    "ideas for modifying the code. Return your chat conversation in the following format:\n"
    "```\n"
    "**chat:**\n"
    "{chat}\n"
    "```\n";

inline constexpr std::string_view kChatUser =
    "{history_section}Current code:\n"
    "{current}\n"
    "\n"
    "{user_section}Predicted modifications:\n"
    "{target}\n";

}  // namespace defaults

/// Prompt texts by resource name; each can be overridden by `<name>.txt` in a directory.
struct PromptTemplates {
  std::map<std::string, std::string> texts = {
      {"persona_novice", std::string(defaults::kPersonaNovice)},
      {"persona_ordinary", std::string(defaults::kPersonaOrdinary)},
      {"persona_expert", std::string(defaults::kPersonaExpert)},
      {"history_request", std::string(defaults::kHistoryRequest)},
      {"judge_system", std::string(defaults::kJudgeSystem)},
      {"judge_user", std::string(defaults::kJudgeUser)},
      {"instruction_system", std::string(defaults::kInstructionSystem)},
      {"instruction_user", std::string(defaults::kInstructionUser)},
      {"chat_system", std::string(defaults::kChatSystem)},
      {"chat_user", std::string(defaults::kChatUser)},
  };

  const std::string& get(const std::string& name) const {
    auto it = texts.find(name);
    if (it == texts.end()) throw Error(Errc::kInvalidArgument, "no prompt template '" + name + "'");
    return it->second;
  }

  const std::string& persona(Persona p) const {
    return get("persona_" + std::string(persona_name(p)));
  }

  /// Overrides every known template that has a file in `dir`.
  static PromptTemplates load(const std::filesystem::path& dir) {
    PromptTemplates t;
    if (!std::filesystem::is_directory(dir)) {
      throw Error(Errc::kIo, "prompt directory " + dir.string() + " does not exist");
    }
    for (auto& [name, text] : t.texts) {
      std::ifstream in(dir / (name + ".txt"), std::ios::binary);
      if (!in) continue;
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    return t;
  }
};

}  // namespace progassist::pipeline
