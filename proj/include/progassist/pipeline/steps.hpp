#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "progassist/conversation.hpp"
#include "progassist/edit_formats.hpp"
#include "progassist/edit_script.hpp"
#include "progassist/error.hpp"
#include "progassist/llm/client.hpp"
#include "progassist/pipeline/prompts.hpp"
#include "progassist/pipeline/record.hpp"
#include "progassist/rng.hpp"

namespace progassist::pipeline {

/// Knobs for the LLM-backed steps.
struct LlmSettings {
  std::string model_id = "default";
  double temperature = 0.0;
  int max_tokens = 2048;
  int parse_retries = 2;  // extra attempts when a reply cannot be parsed
};

/// Default decomposition probability per source.
inline double default_decompose_probability(Source s) {
  return s == Source::kGitCommit ? 0.9 : 0.5;
}

/// Expands each multi-hunk step, with probability `p`, into single-hunk
/// steps applied in a uniformly random order.
inline ProcessRecord decompose(const ProcessRecord& record, double p, Rng& rng) {
  if (p < 0 || p > 1) throw Error(Errc::kInvalidArgument, "decompose probability outside [0,1]");
  ProcessRecord out = record;
  out.snapshots.clear();
  out.snapshots.push_back(record.snapshots.front());
  for (std::size_t s = 1; s < record.snapshots.size(); ++s) {
    const TextDocument& from = record.snapshots[s - 1];
    const TextDocument& to = record.snapshots[s];
    const EditScript script = diff(from, to);
    if (script.hunks.size() > 1 && rng.bernoulli(p)) {
      std::vector<std::size_t> order(script.hunks.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      rng.shuffle(std::span<std::size_t>(order));
      std::vector<bool> applied(order.size(), false);
      for (std::size_t step = 0; step + 1 < order.size(); ++step) {
        applied[order[step]] = true;
        EditScript partial;
        for (std::size_t k = 0; k < order.size(); ++k) {
          if (applied[k]) partial.hunks.push_back(script.hunks[k]);
        }
        out.snapshots.push_back(apply_edit(partial, from));
      }
    }
    out.snapshots.push_back(to);
  }
  return out;
}

/// Probability of each candidate index `min_index..n-1` (1-based, the final
/// snapshot excluded), proportional to decay^(i-1).
inline std::vector<double> timepoint_weights(std::size_t n, double decay, std::size_t min_index = 1) {
  std::vector<double> w;
  double total = 0;
  for (std::size_t i = min_index; i + 1 <= n - 1 + 1 && i <= n - 1; ++i) {
    w.push_back(std::pow(decay, static_cast<double>(i - 1)));
    total += w.back();
  }
  for (double& x : w) x /= total;
  return w;
}

/// 1-based index of the snapshot used as the current code.
inline std::size_t pick_timepoint(const ProcessRecord& record, Rng& rng, double decay = 0.9,
                                  std::size_t min_index = 1) {
  const std::size_t n = record.snapshots.size();
  if (n < 2) throw Error(Errc::kInvalidArgument, "record needs at least two snapshots");
  if (min_index < 1 || min_index > n - 1) {
    throw Error(Errc::kInvalidArgument, "no time point at or after index " + std::to_string(min_index));
  }
  const std::vector<double> w = timepoint_weights(n, decay, min_index);
  const double u = rng.uniform01();
  double acc = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (u < acc) return min_index + k;
  }
  return n - 1;
}

inline SampleType assign_type(Rng& rng) {
  return kAllSampleTypes[rng.uniform_index(kAllSampleTypes.size())];
}

/// A contiguous group of hunks of diff(C, F) judged as one unit.
struct ChangeSegment {
  std::vector<ChangeHunk> hunks;
  std::optional<bool> kept;

  bool operator==(const ChangeSegment&) const = default;
};

/// One segment per hunk; hunks with no unchanged line between them share a segment.
inline std::vector<ChangeSegment> segment_changes(const TextDocument& current,
                                                  const TextDocument& final_doc) {
  if (current == final_doc) throw Error(Errc::kNoChanges, "current code already equals the final snippet");
  std::vector<ChangeSegment> out;
  for (ChangeHunk& h : diff(current, final_doc).hunks) {
    if (!out.empty() && out.back().hunks.back().old_end() == h.old_start) {
      out.back().hunks.push_back(std::move(h));
    } else {
      out.push_back({{std::move(h)}, std::nullopt});
    }
  }
  return out;
}

inline EditScript merge_kept(const std::vector<ChangeSegment>& segments) {
  EditScript script;
  for (const ChangeSegment& s : segments) {
    if (s.kept.value_or(true)) script.hunks.insert(script.hunks.end(), s.hunks.begin(), s.hunks.end());
  }
  return script;
}

// ------------------------------------------------------------------ prompting

inline std::string fence(std::string_view code, std::string_view language = {}) {
  std::string out = "```";
  out += language;
  out += '\n';
  out += code;
  if (!code.empty() && code.back() != '\n') out += '\n';
  out += "```";
  return out;
}

inline std::string history_section(const std::vector<TextDocument>& history, std::string_view lang) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += "Programming process " + std::to_string(i + 1) + ":\n" +
           fence(history[i].content(), lang) + "\n\n";
  }
  return out;
}

inline llm::ChatRequest make_request(const LlmSettings& s, std::string system, std::string user,
                                     std::uint64_t seed) {
  llm::ChatRequest req;
  req.model_id = s.model_id;
  req.temperature = s.temperature;
  req.max_tokens = s.max_tokens;
  req.seed = static_cast<std::int64_t>(seed & 0x7fffffffffffffffULL);
  req.messages = {{"system", std::move(system)}, {"user", std::move(user)}};
  return req;
}

/// Calls the backend until `parse` yields a value, varying the request seed
/// per attempt; throws `code` once the retry budget is gone.
template <typename Parse>
auto ask_until_parsed(llm::ChatBackend& client, const LlmSettings& s, const std::string& system,
                      const std::string& user, std::uint64_t seed, Errc code,
                      const std::string& what, Parse parse) -> typename decltype(parse(std::string()))::value_type {
  for (int attempt = 0; attempt <= s.parse_retries; ++attempt) {
    const std::string reply =
        client.complete(make_request(s, system, user, mix64(seed + static_cast<std::uint64_t>(attempt))));
    if (auto value = parse(reply)) return *value;
  }
  throw Error(code, what + " not parseable after " + std::to_string(s.parse_retries + 1) + " attempts");
}

/// Bodies of all fenced code blocks, in order.
inline std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> out;
  std::optional<std::string> open;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    const std::string trimmed = trim(line);
    if (!open && trimmed.rfind("```", 0) == 0) {
      open.emplace();
    } else if (open && trimmed == "```") {
      out.push_back(std::move(*open));
      open.reset();
    } else if (open) {
      *open += line;
      *open += '\n';
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

inline std::string with_final_newline(std::string s) {
  if (!s.empty() && s.back() != '\n') s += '\n';
  return s;
}

/// Asks the model to replay how `seed_code` was written, as a series of code blocks.
inline ProcessRecord gen_history_ai(const TextDocument& seed_code, Persona persona,
                                    llm::ChatBackend& client, const PromptTemplates& prompts,
                                    const LlmSettings& settings, std::uint64_t seed,
                                    std::string id = {}, std::string language = {}) {
  const std::string user =
      fill_template(prompts.get("history_request"), {{"code", fence(seed_code.content(), language)},
                                                     {"language", language}});
  auto parse = [&](const std::string& reply) -> std::optional<ProcessRecord> {
    std::vector<std::string> blocks = fenced_blocks(reply);
    if (blocks.empty()) return std::nullopt;
    ProcessRecord r;
    r.id = id;
    r.source = Source::kAiProgrammer;
    r.language = language;
    r.persona = persona;
    for (std::string& b : blocks) r.snapshots.emplace_back(b);
    const bool same = with_final_newline(r.snapshots.back().content()) ==
                      with_final_newline(seed_code.content());
    r.repaired = !same;
    r.snapshots.back() = seed_code;
    r.snapshots = collapse_repeats(std::move(r.snapshots));
    if (r.snapshots.size() < 2) return std::nullopt;
    return r;
  };
  return ask_until_parsed(client, settings, prompts.persona(persona), user, seed,
                          Errc::kUnparseableHistory, "coding history", parse);
}

/// Reads one `**Decision:** True/False` per analyzed change.
inline std::vector<bool> parse_decisions(const std::string& reply) {
  static const std::regex kDecision(R"(\*\*Decision:\*\*\s*`?\s*(True|False)\s*`?)");
  std::vector<bool> out;
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), kDecision);
       it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str() == "True");
  }
  return out;
}

inline std::string changes_section(const TextDocument& current,
                                   const std::vector<ChangeSegment>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    EditScript one{segments[i].hunks};
    out += "Change " + std::to_string(i + 1) + ":\n```diff\n" +
           detail::render_unified(one, current) + "```\n\n";
  }
  return out;
}

/// Asks the model which segments the programmer would want proposed.
inline std::vector<ChangeSegment> judge_segments(const std::vector<TextDocument>& history,
                                                 const TextDocument& current,
                                                 std::vector<ChangeSegment> segments,
                                                 llm::ChatBackend& client, const PromptTemplates& prompts,
                                                 const LlmSettings& settings, std::uint64_t seed,
                                                 std::string_view language = {}) {
  const std::string user = fill_template(
      prompts.get("judge_user"), {{"history_section", history_section(history, language)},
                                  {"current", fence(current.content(), language)},
                                  {"changes", changes_section(current, segments)}});
  auto parse = [&](const std::string& reply) -> std::optional<std::vector<bool>> {
    std::vector<bool> d = parse_decisions(reply);
    if (d.size() != segments.size()) return std::nullopt;
    return d;
  };
  const std::vector<bool> decisions =
      ask_until_parsed(client, settings, prompts.get("judge_system"), user, seed,
                       Errc::kJudgeParseError, "judge decisions", parse);
  for (std::size_t i = 0; i < segments.size(); ++i) segments[i].kept = decisions[i];
  return segments;
}

/// Text after `marker`, up to the closing fence if there is one.
inline std::optional<std::string> extract_marked(const std::string& reply, std::string_view marker) {
  const std::size_t at = reply.find(marker);
  if (at == std::string::npos) return std::nullopt;
  std::string_view rest = std::string_view(reply).substr(at + marker.size());
  const std::size_t close = rest.find("```");
  if (close != std::string_view::npos) rest = rest.substr(0, close);
  std::string body = trim(rest);
  if (body.empty()) return std::nullopt;
  return body;
}

struct PromptContext {
  const std::vector<TextDocument>& history;
  const TextDocument& current;
  std::string target;  // predicted modification as shown to the model
  std::string language;
};

inline std::string gen_instruction(const PromptContext& ctx, const std::optional<std::string>& metadata,
                                   llm::ChatBackend& client, const PromptTemplates& prompts,
                                   const LlmSettings& settings, std::uint64_t seed) {
  const std::string meta = metadata ? "Additional details:\n" + *metadata + "\n\n" : std::string();
  const std::string user = fill_template(
      prompts.get("instruction_user"), {{"history_section", history_section(ctx.history, ctx.language)},
                                        {"current", fence(ctx.current.content(), ctx.language)},
                                        {"metadata_section", meta},
                                        {"target", ctx.target}});
  return ask_until_parsed(client, settings, prompts.get("instruction_system"), user, seed,
                          Errc::kInstructionParseError, "instruction",
                          [](const std::string& r) { return extract_marked(r, "**instruction:**"); });
}

inline std::string gen_chat(const PromptContext& ctx, const std::optional<std::string>& user_text,
                            llm::ChatBackend& client, const PromptTemplates& prompts,
                            const LlmSettings& settings, std::uint64_t seed) {
  const std::string section = user_text ? "User instruction:\n" + *user_text + "\n\n" : std::string();
  const std::string user = fill_template(
      prompts.get("chat_user"), {{"history_section", history_section(ctx.history, ctx.language)},
                                 {"current", fence(ctx.current.content(), ctx.language)},
                                 {"user_section", section},
                                 {"target", ctx.target}});
  return ask_until_parsed(client, settings, prompts.get("chat_system"), user, seed,
                          Errc::kChatParseError, "chat",
                          [](const std::string& r) { return extract_marked(r, "**chat:**"); });
}

/// Picks none / cursor / selection uniformly. The cursor sits at the start
/// of the first changed line; the selection spans the first through last
/// changed old lines of the kept segments.
inline TargetAnnotation annotate_target_random(const TextDocument& current,
                                               const std::vector<ChangeSegment>& kept, Rng& rng) {
  const EditScript script = merge_kept(kept);
  if (script.empty()) return std::monostate{};
  const std::size_t start = current.line_offset(script.hunks.front().old_start - 1);
  const std::size_t end = current.line_offset(script.hunks.back().old_end() - 1);
  switch (rng.uniform_index(3)) {
    case 0: return std::monostate{};
    case 1: return Cursor{start};
    default: return Selection{start, end};
  }
}

}  // namespace progassist::pipeline
