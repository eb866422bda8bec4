#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "progassist/conversation.hpp"
#include "progassist/conversation_json.hpp"
#include "progassist/edit_formats.hpp"
#include "progassist/error.hpp"
#include "progassist/llm/client.hpp"
#include "progassist/pipeline/prompts.hpp"
#include "progassist/pipeline/record.hpp"
#include "progassist/pipeline/steps.hpp"
#include "progassist/rng.hpp"

namespace progassist::pipeline {

inline constexpr int kSampleSchemaVersion = 1;

struct Provenance {
  std::string record_id;
  Source source = Source::kGitCommit;
  std::size_t time_index = 0;  // 1-based snapshot used as the current code
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;       // per-sample seed

  bool operator==(const Provenance&) const = default;
};

struct TrainingSample {
  Conversation conversation;  // ends at the current or user message
  Message target;             // assistant
  SampleType sample_type = SampleType::kC;
  EditFormat format = EditFormat::kWholeFile;
  Provenance provenance;

  bool operator==(const TrainingSample&) const = default;

  /// Conversation plus target, as the model would be trained on it.
  std::string render() const {
    Conversation full = conversation;
    full.messages.push_back(target);
    return render_template(full, format);
  }
};

struct Discarded {
  Errc code = Errc::kInvalidArgument;
  std::string reason;
};

struct AssembleOptions {
  EditFormat format = EditFormat::kWholeFile;
  std::optional<std::size_t> window;  // keep only the newest k history entries
  bool with_reasoning = false;        // chat before the code change
  bool judge_user_types = false;      // also judge segments when an instruction exists
  bool annotate = true;
  std::string system_prompt = std::string(kDefaultSystemPrompt);
};

/// What the backend is shown as the predicted modification.
inline std::string describe_target(const TextDocument& current, const TextDocument& expected) {
  if (current == expected) return "(no code change)\n";
  return "```diff\n" + render_edit(current, expected, EditFormat::kUnifiedDiff).payload + "```\n";
}

/// Throws unless the sample's type matches its messages and its target
/// reproduces `expected` from the current code.
inline void check_sample(const TrainingSample& s, const std::optional<TextDocument>& expected = {}) {
  std::size_t history = 0, user = 0, current = 0;
  const Message* cur = nullptr;
  for (const Message& m : s.conversation.messages) {
    history += m.role == Role::kHistory;
    user += m.role == Role::kUser;
    if (m.role == Role::kCurrent) {
      ++current;
      cur = &m;
    }
    if (m.role == Role::kAssistant) throw Error(Errc::kSchemaError, "sample conversation holds an assistant turn");
  }
  if (current != 1) throw Error(Errc::kSchemaError, "sample needs exactly one current message");
  if (!has_history(s.sample_type) && history != 0) {
    throw Error(Errc::kSchemaError, "type " + std::string(sample_type_name(s.sample_type)) + " has history");
  }
  if (has_history(s.sample_type) && history == 0) {
    throw Error(Errc::kSchemaError, "type " + std::string(sample_type_name(s.sample_type)) + " lacks history");
  }
  if (has_user(s.sample_type) != (user == 1) || user > 1) {
    throw Error(Errc::kSchemaError, "type " + std::string(sample_type_name(s.sample_type)) +
                                        " disagrees with its user messages");
  }
  if (s.target.role != Role::kAssistant) throw Error(Errc::kSchemaError, "target is not an assistant message");
  if (s.target.code_change && s.target.code_change->format != s.format) {
    throw Error(Errc::kFormatMismatch, "target code change is not in the sample format");
  }
  if (auto bad = validate_order(s.conversation, /*allow_incomplete=*/true)) {
    throw Error(Errc::kOrderViolation, bad->reason);
  }
  if (expected) {
    const TextDocument c(cur->body);
    const TextDocument got = s.target.code_change ? apply_rendered(*s.target.code_change, c) : c;
    if (!(got == *expected)) throw Error(Errc::kContextMismatch, "target does not reproduce the kept changes");
  }
}

/// Builds one sample from `record` with snapshot `time_index` (1-based) as
/// the current code. Step failures come back as Discarded.
inline std::variant<TrainingSample, Discarded> assemble_sample(
    const ProcessRecord& record, std::size_t time_index, SampleType type, const AssembleOptions& opts,
    Rng& rng, llm::ChatBackend& client, const PromptTemplates& prompts, const LlmSettings& settings,
    std::size_t sample_index = 0) {
  try {
    const std::size_t n = record.snapshots.size();
    if (time_index < 1 || time_index >= n) {
      throw Error(Errc::kOutOfBounds, "time index " + std::to_string(time_index) + " outside 1.." +
                                          std::to_string(n - 1));
    }
    if (has_history(type) && time_index < 2) {
      throw Error(Errc::kInvalidArgument, "history types need a time index of at least 2");
    }
    const std::uint64_t seed = rng.seed();
    const TextDocument& current = record.snapshots[time_index - 1];
    std::vector<TextDocument> history;
    if (has_history(type)) {
      history.assign(record.snapshots.begin(),
                     record.snapshots.begin() + static_cast<std::ptrdiff_t>(time_index - 1));
      if (opts.window && history.size() > *opts.window) {
        history.erase(history.begin(), history.end() - static_cast<std::ptrdiff_t>(*opts.window));
      }
    }

    std::vector<ChangeSegment> segments = segment_changes(current, record.final_snippet());
    if (!has_user(type) || opts.judge_user_types) {
      segments = judge_segments(history, current, std::move(segments), client, prompts, settings,
                                mix64(seed ^ 0x6a75646765ULL), record.language);
    } else {
      for (ChangeSegment& s : segments) s.kept = true;
    }
    std::vector<ChangeSegment> kept;
    for (const ChangeSegment& s : segments) {
      if (*s.kept) kept.push_back(s);
    }
    if (kept.empty() && !has_user(type)) {
      return Discarded{Errc::kNoChanges, "every change segment was rejected"};
    }
    const TextDocument expected = apply_edit(merge_kept(kept), current);

    const PromptContext ctx{history, current, describe_target(current, expected), record.language};
    std::optional<std::string> user_text;
    if (has_user(type)) {
      user_text = gen_instruction(ctx, record.metadata, client, prompts, settings,
                                  mix64(seed ^ 0x696e737472ULL));
    }
    const std::string chat = gen_chat(ctx, user_text, client, prompts, settings, mix64(seed ^ 0x63686174ULL));

    TrainingSample s;
    s.sample_type = type;
    s.format = opts.format;
    s.provenance = {record.id, record.source, time_index, sample_index, seed};
    s.conversation.messages.push_back(Message::system(opts.system_prompt));
    for (const TextDocument& h : history) s.conversation.messages.push_back(Message::history(h.content()));
    TargetAnnotation ann;
    if (opts.annotate) ann = annotate_target_random(current, kept, rng);
    s.conversation.messages.push_back(Message::current(current.content(), ann));
    if (user_text) s.conversation.messages.push_back(Message::user(*user_text));
    std::optional<RenderedEdit> change;
    if (!(expected == current)) change = render_edit(current, expected, opts.format);
    s.target = Message::assistant(std::move(change), chat, opts.with_reasoning);

    check_sample(s, expected);
    (void)s.render();  // surfaces reserved tokens in code or generated text
    return s;
  } catch (const Error& e) {
    return Discarded{e.code(), e.detail()};
  }
}

// ---------------------------------------------------------------- JSON lines

inline nlohmann::json sample_to_json(const TrainingSample& s) {
  return {{"schema_version", kSampleSchemaVersion},
          {"sample_type", sample_type_name(s.sample_type)},
          {"format", format_name(s.format)},
          {"conversation", s.conversation},
          {"target", s.target},
          {"provenance",
           {{"record_id", s.provenance.record_id},
            {"source", source_name(s.provenance.source)},
            {"time_index", s.provenance.time_index},
            {"sample_index", s.provenance.sample_index},
            {"seed", s.provenance.seed}}}};
}

inline TrainingSample sample_from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kSampleSchemaVersion) {
    throw Error(Errc::kSchemaVersion, "sample schema version " + std::to_string(version) +
                                          " (expected " + std::to_string(kSampleSchemaVersion) + ")");
  }
  TrainingSample s;
  s.sample_type = parse_sample_type(j.at("sample_type").get<std::string>());
  s.format = parse_format_name(j.at("format").get<std::string>());
  s.conversation = j.at("conversation").get<Conversation>();
  s.target = j.at("target").get<Message>();
  const auto& p = j.at("provenance");
  s.provenance.record_id = p.at("record_id").get<std::string>();
  s.provenance.source = parse_source(p.at("source").get<std::string>());
  s.provenance.time_index = p.at("time_index").get<std::size_t>();
  s.provenance.sample_index = p.value("sample_index", std::size_t{0});
  s.provenance.seed = p.at("seed").get<std::uint64_t>();
  return s;
}

inline std::string sample_to_line(const TrainingSample& s) { return sample_to_json(s).dump(); }

inline void emit_jsonl(const std::vector<TrainingSample>& samples, std::ostream& out) {
  for (const TrainingSample& s : samples) out << sample_to_line(s) << '\n';
}

inline void emit_jsonl(const std::vector<TrainingSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  emit_jsonl(samples, out);
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

inline std::vector<TrainingSample> load_jsonl(std::istream& in, const std::string& name = "<stream>") {
  std::vector<TrainingSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kSchemaError, name + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), name + ":" + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return out;
}

inline std::vector<TrainingSample> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return load_jsonl(in, path.string());
}

}  // namespace progassist::pipeline
