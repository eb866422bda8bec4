#pragma once

#include <regex>
#include <string>

#include "progassist/llm/client.hpp"
#include "progassist/pipeline/steps.hpp"
#include "progassist/rng.hpp"

namespace progassist::pipeline {

/// Offline stand-in for the synthesis model. Replies are a pure function of
/// the request, so pipeline runs stay reproducible without a server.
///   judge:       one decision per "Change N:" section, True with `keep_rate`
///   instruction: a short instruction under **instruction:**
///   chat:        a short explanation under **chat:**
///   persona:     growing prefixes of the requested final code, then the code itself
class MockSynthesisBackend : public llm::ChatBackend {
 public:
  explicit MockSynthesisBackend(double keep_rate = 0.75) : keep_rate_(keep_rate) {}

  std::string complete(const llm::ChatRequest& req) override {
    llm::validate(req);
    const std::string& system = req.messages.front().content;
    const std::string& user = req.messages.back().content;
    Rng rng(mix64(hash_text(llm::request_digest(req))));
    if (system.find("**Decision:**") != std::string::npos) return judge(user, rng);
    if (system.find("**instruction:**") != std::string::npos) return instruction(rng);
    if (system.find("**chat:**") != std::string::npos) return chat(rng);
    return history(user, rng);
  }

 private:
  std::string judge(const std::string& user, Rng& rng) const {
    static const std::regex kChange(R"((^|\n)Change \d+:)");
    const auto n = std::distance(std::sregex_iterator(user.begin(), user.end(), kChange), std::sregex_iterator());
    std::string out;
    for (long i = 1; i <= n; ++i) {
      out += "**Analysis of change " + std::to_string(i) + ":**\n\nLooks consistent with the surrounding code.\n\n";
      out += std::string("**Decision:** `") + (rng.bernoulli(keep_rate_) ? "True" : "False") + "`\n\n";
    }
    return out;
  }

  static std::string instruction(Rng& rng) {
    static const char* kTexts[] = {"Finish the function.", "Fix the remaining bug in this code.",
                                   "Please complete the implementation.", "Clean up the code."};
    return std::string("```\n**instruction:**\n") + kTexts[rng.uniform_index(4)] + "\n```\n";
  }

  static std::string chat(Rng& rng) {
    static const char* kTexts[] = {"I continued the edit you started.", "I updated the code to finish the change.",
                                   "The change completes the current step."};
    return std::string("```\n**chat:**\n") + kTexts[rng.uniform_index(3)] + "\n```\n";
  }

  static std::string history(const std::string& user, Rng& rng) {
    const std::vector<std::string> blocks = fenced_blocks(user);
    if (blocks.empty()) return "I could not find the code.";
    const TextDocument target(blocks.front());
    const auto lines = target.tokens();
    std::string out;
    const std::size_t steps = 1 + rng.uniform_index(3);
    for (std::size_t s = 1; s <= steps; ++s) {
      const std::size_t take = lines.size() * s / (steps + 1);
      if (take == 0) continue;
      std::string partial;
      for (std::size_t i = 0; i < take; ++i) partial += lines[i].text + "\n";
      out += "Step " + std::to_string(s) + ":\n" + fence(partial) + "\n\n";
    }
    out += "Final:\n" + fence(target.content()) + "\n";
    return out;
  }

  double keep_rate_;
};

}  // namespace progassist::pipeline
