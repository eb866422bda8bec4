#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "progassist/error.hpp"
#include "progassist/llm/client.hpp"
#include "progassist/pipeline/prompts.hpp"
#include "progassist/pipeline/record.hpp"
#include "progassist/pipeline/sample.hpp"
#include "progassist/pipeline/steps.hpp"
#include "progassist/rng.hpp"

namespace progassist::pipeline {

/// Final code for which the coding history is still to be generated.
struct SeedCode {
  std::string id;
  std::string code;
  std::string language;
  std::optional<Persona> persona;
};

using InputItem = std::variant<ProcessRecord, SeedCode>;

inline const std::string& item_id(const InputItem& item) {
  return std::visit([](const auto& v) -> const std::string& { return v.id; }, item);
}

struct DiscardEntry {
  std::string record_id;
  std::size_t sample_index = 0;
  Errc code = Errc::kInvalidArgument;
  std::string reason;
};

inline nlohmann::json discard_to_json(const DiscardEntry& d) {
  return {{"record_id", d.record_id},
          {"sample_index", d.sample_index},
          {"code", errc_name(d.code)},
          {"reason", d.reason}};
}

struct LoadedInputs {
  std::vector<InputItem> items;
  std::vector<DiscardEntry> rejected;  // inputs that never became records
};

/// One input line. Recognized shapes:
///   {"id", "before", "after", "message"?, "language"?}             commit
///   {"id"?, "problem_id"?, "user_id"?, "attempts": [{"code", "verdict"}], "problem"?}
///   {"id", "snapshots": ["...", ...], "source"?, "metadata"?}      ready-made record
///   {"id", "code", "persona"?}                                     seed for generated history
inline std::variant<InputItem, DiscardEntry> parse_input(const nlohmann::json& j, const std::string& fallback_id) {
  std::string id = j.value("id", std::string());
  if (id.empty() && j.contains("problem_id")) {
    id = j.at("problem_id").get<std::string>() + "/" + j.value("user_id", std::string("anon"));
  }
  if (id.empty()) id = fallback_id;
  const std::string language = j.value("language", std::string());
  try {
    if (j.contains("attempts")) {
      std::vector<Attempt> attempts;
      for (const auto& a : j.at("attempts")) {
        attempts.push_back({a.at("code").get<std::string>(), a.at("verdict").get<std::string>()});
      }
      std::optional<std::string> problem;
      if (j.contains("problem")) problem = j.at("problem").get<std::string>();
      auto r = ingest_submissions(attempts, id, language, problem);
      if (auto* rej = std::get_if<Rejected>(&r)) return DiscardEntry{id, 0, Errc::kSchemaError, rej->reason};
      return InputItem(std::get<ProcessRecord>(std::move(r)));
    }
    if (j.contains("before") || j.contains("after")) {
      return InputItem(ingest_git(TextDocument(j.at("before").get<std::string>()),
                                  TextDocument(j.at("after").get<std::string>()),
                                  j.value("message", std::string()), id, language));
    }
    if (j.contains("snapshots")) {
      ProcessRecord r;
      r.id = id;
      r.language = language;
      r.source = parse_source(j.value("source", std::string("git_commit")));
      for (const auto& s : j.at("snapshots")) r.snapshots.emplace_back(s.get<std::string>());
      r.snapshots = collapse_repeats(std::move(r.snapshots));
      if (j.contains("metadata")) r.metadata = j.at("metadata").get<std::string>();
      check_record(r);
      return InputItem(std::move(r));
    }
    if (j.contains("code")) {
      SeedCode s{id, j.at("code").get<std::string>(), language, std::nullopt};
      if (j.contains("persona")) s.persona = parse_persona(j.at("persona").get<std::string>());
      return InputItem(std::move(s));
    }
    return DiscardEntry{id, 0, Errc::kSchemaError, "unrecognized input shape"};
  } catch (const nlohmann::json::exception& e) {
    return DiscardEntry{id, 0, Errc::kSchemaError, e.what()};
  } catch (const Error& e) {
    return DiscardEntry{id, 0, e.code(), e.detail()};
  }
}

/// Reads JSONL inputs; unparseable lines are errors, unusable records are rejections.
inline LoadedInputs load_inputs(std::istream& in, const std::string& name = "<stream>") {
  LoadedInputs out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(Errc::kSchemaError, name + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    auto parsed = parse_input(j, "line-" + std::to_string(line_no));
    if (auto* item = std::get_if<InputItem>(&parsed)) {
      out.items.push_back(std::move(*item));
    } else {
      out.rejected.push_back(std::get<DiscardEntry>(std::move(parsed)));
    }
  }
  return out;
}

inline LoadedInputs load_inputs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return load_inputs(in, path.string());
}

struct DriverOptions {
  std::uint64_t global_seed = 0;
  std::size_t workers = 1;
  std::size_t samples_per_record = 1;
  double decay = 0.9;
  std::optional<double> decompose_probability;  // default depends on the source
  AssembleOptions assemble;
  LlmSettings llm;
};

struct MeanMax {
  std::size_t count = 0;
  double sum = 0;
  std::size_t max = 0;

  void add(std::size_t v) {
    ++count;
    sum += static_cast<double>(v);
    max = std::max(max, v);
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

struct SynthStats {
  std::size_t attempted = 0;
  std::size_t emitted = 0;
  std::size_t discarded = 0;
  std::array<std::size_t, 4> by_type{};
  MeanMax history;        // history snippets per sample
  MeanMax input_chars;    // rendered prompt
  MeanMax output_chars;   // rendered target

  void add(const TrainingSample& s) {
    ++emitted;
    ++by_type[static_cast<std::size_t>(s.sample_type)];
    std::size_t h = 0;
    for (const Message& m : s.conversation.messages) h += m.role == Role::kHistory;
    history.add(h);
    input_chars.add(render_template(s.conversation, s.format).size());
    output_chars.add(render_message(s.target, s.format).size());
  }
};

inline nlohmann::json stats_to_json(const SynthStats& s) {
  nlohmann::json types = nlohmann::json::object();
  for (SampleType t : kAllSampleTypes) {
    const std::size_t c = s.by_type[static_cast<std::size_t>(t)];
    types[std::string(sample_type_name(t))] = {
        {"count", c}, {"share", s.emitted ? static_cast<double>(c) / static_cast<double>(s.emitted) : 0.0}};
  }
  auto mm = [](const MeanMax& m) { return nlohmann::json{{"mean", m.mean()}, {"max", m.max}}; };
  return {{"attempted", s.attempted},     {"emitted", s.emitted},
          {"discarded", s.discarded},     {"types", types},
          {"history", mm(s.history)},     {"input_chars", mm(s.input_chars)},
          {"output_chars", mm(s.output_chars)}};
}

inline std::string stats_to_text(const SynthStats& s) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "attempted %zu  emitted %zu  discarded %zu\n", s.attempted, s.emitted,
                s.discarded);
  out << buf;
  for (SampleType t : kAllSampleTypes) {
    const std::size_t c = s.by_type[static_cast<std::size_t>(t)];
    std::snprintf(buf, sizeof buf, "  %-4s %6zu  %5.1f%%\n", std::string(sample_type_name(t)).c_str(), c,
                  s.emitted ? 100.0 * static_cast<double>(c) / static_cast<double>(s.emitted) : 0.0);
    out << buf;
  }
  auto row = [&](const char* name, const MeanMax& m) {
    std::snprintf(buf, sizeof buf, "  %-14s mean %9.1f  max %zu\n", name, m.mean(), m.max);
    out << buf;
  };
  row("history", s.history);
  row("input chars", s.input_chars);
  row("output chars", s.output_chars);
  return out.str();
}

struct SynthResult {
  std::vector<TrainingSample> samples;
  std::vector<DiscardEntry> discards;
  SynthStats stats;
};

namespace detail {

struct ItemOutcome {
  std::vector<TrainingSample> samples;
  std::vector<DiscardEntry> discards;
};

inline ItemOutcome run_item(const InputItem& item, std::size_t ordinal, const DriverOptions& opts,
                            llm::ChatBackend& client, const PromptTemplates& prompts) {
  ItemOutcome out;
  const std::string& id = item_id(item);
  const std::size_t k_max = opts.samples_per_record;
  ProcessRecord record;
  try {
    if (const auto* seed = std::get_if<SeedCode>(&item)) {
      Rng rng(derive_seed(opts.global_seed, id, {ordinal, 0x68697374ULL}));
      const Persona persona =
          seed->persona.value_or(static_cast<Persona>(rng.uniform_index(3)));
      record = gen_history_ai(TextDocument(seed->code), persona, client, prompts, opts.llm, rng.next(), id,
                              seed->language);
    } else {
      record = std::get<ProcessRecord>(item);
    }
    check_record(record);
  } catch (const Error& e) {
    for (std::size_t k = 0; k < k_max; ++k) out.discards.push_back({id, k, e.code(), e.detail()});
    return out;
  }

  const double p = opts.decompose_probability.value_or(default_decompose_probability(record.source));
  for (std::size_t k = 0; k < k_max; ++k) {
    Rng rng(derive_seed(opts.global_seed, id, {ordinal, k}));
    try {
      const ProcessRecord expanded = decompose(record, p, rng);
      SampleType type = assign_type(rng);
      // A history needs a snapshot before the current one and one after it.
      if (has_history(type) && expanded.snapshots.size() < 3) type = without_history(type);
      const std::size_t i = pick_timepoint(expanded, rng, opts.decay, has_history(type) ? 2 : 1);
      auto r = assemble_sample(expanded, i, type, opts.assemble, rng, client, prompts, opts.llm, k);
      if (auto* s = std::get_if<TrainingSample>(&r)) {
        out.samples.push_back(std::move(*s));
      } else {
        const auto& d = std::get<Discarded>(r);
        out.discards.push_back({id, k, d.code, d.reason});
      }
    } catch (const Error& e) {
      out.discards.push_back({id, k, e.code(), e.detail()});
    }
  }
  return out;
}

}  // namespace detail

/// Runs every item through the pipeline. Output order follows input order
/// whatever the worker count; each sample's randomness comes only from
/// (global seed, record id, ordinal, sample index).
inline SynthResult run_pipeline(const std::vector<InputItem>& items, const DriverOptions& opts,
                                llm::ChatBackend& client, const PromptTemplates& prompts = {}) {
  if (opts.workers < 1) throw Error(Errc::kInvalidArgument, "worker count must be at least 1");
  std::vector<detail::ItemOutcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
      outcomes[i] = detail::run_item(items[i], i, opts, client, prompts);
    }
  };
  const std::size_t n_threads = std::min(opts.workers, std::max<std::size_t>(items.size(), 1));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  SynthResult result;
  for (detail::ItemOutcome& o : outcomes) {
    for (TrainingSample& s : o.samples) {
      result.stats.add(s);
      result.samples.push_back(std::move(s));
    }
    for (DiscardEntry& d : o.discards) result.discards.push_back(std::move(d));
  }
  result.stats.discarded = result.discards.size();
  result.stats.attempted = result.stats.emitted + result.stats.discarded;
  return result;
}

}  // namespace progassist::pipeline
