#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "progassist/error.hpp"
#include "progassist/text_document.hpp"

namespace progassist::pipeline {

enum class Source { kAiProgrammer, kGitCommit, kOnlineSubmit };

inline std::string_view source_name(Source s) {
  switch (s) {
    case Source::kAiProgrammer: return "ai_programmer";
    case Source::kGitCommit: return "git_commit";
    case Source::kOnlineSubmit: return "online_submit";
  }
  return "ai_programmer";
}

inline Source parse_source(std::string_view name) {
  for (Source s : {Source::kAiProgrammer, Source::kGitCommit, Source::kOnlineSubmit}) {
    if (source_name(s) == name) return s;
  }
  throw Error(Errc::kSchemaError, "unknown source '" + std::string(name) + "'");
}

enum class Persona { kNovice, kOrdinary, kExpert };

inline std::string_view persona_name(Persona p) {
  switch (p) {
    case Persona::kNovice: return "novice";
    case Persona::kOrdinary: return "ordinary";
    case Persona::kExpert: return "expert";
  }
  return "ordinary";
}

inline Persona parse_persona(std::string_view name) {
  for (Persona p : {Persona::kNovice, Persona::kOrdinary, Persona::kExpert}) {
    if (persona_name(p) == name) return p;
  }
  throw Error(Errc::kSchemaError, "unknown persona '" + std::string(name) + "'");
}

/// Which optional inputs accompany the current code: history and/or user instruction.
enum class SampleType { kC, kHC, kCU, kHCU };

inline constexpr std::array<SampleType, 4> kAllSampleTypes = {SampleType::kC, SampleType::kHC,
                                                              SampleType::kCU, SampleType::kHCU};

inline std::string_view sample_type_name(SampleType t) {
  switch (t) {
    case SampleType::kC: return "C";
    case SampleType::kHC: return "HC";
    case SampleType::kCU: return "CU";
    case SampleType::kHCU: return "HCU";
  }
  return "C";
}

inline SampleType parse_sample_type(std::string_view name) {
  for (SampleType t : kAllSampleTypes) {
    if (sample_type_name(t) == name) return t;
  }
  throw Error(Errc::kSchemaError, "unknown sample type '" + std::string(name) + "'");
}

inline bool has_history(SampleType t) { return t == SampleType::kHC || t == SampleType::kHCU; }
inline bool has_user(SampleType t) { return t == SampleType::kCU || t == SampleType::kHCU; }

inline SampleType without_history(SampleType t) {
  return t == SampleType::kHC ? SampleType::kC : t == SampleType::kHCU ? SampleType::kCU : t;
}

/// A coding process: snapshots in time order, the last being the final snippet.
struct ProcessRecord {
  std::string id;
  Source source = Source::kGitCommit;
  std::vector<TextDocument> snapshots;
  std::string language;
  std::optional<std::string> metadata;  // commit message, problem statement, ...
  std::optional<Persona> persona;
  bool repaired = false;                // final snapshot forced to the seed code

  const TextDocument& final_snippet() const { return snapshots.back(); }
};

/// Throws SCHEMA_ERROR unless there are >= 2 snapshots and neighbours differ.
inline void check_record(const ProcessRecord& r) {
  if (r.snapshots.size() < 2) {
    throw Error(Errc::kSchemaError, "record '" + r.id + "' needs at least two snapshots");
  }
  for (std::size_t i = 1; i < r.snapshots.size(); ++i) {
    if (r.snapshots[i] == r.snapshots[i - 1]) {
      throw Error(Errc::kSchemaError, "record '" + r.id + "' repeats snapshot " + std::to_string(i));
    }
  }
}

/// Drops snapshots identical to their predecessor.
inline std::vector<TextDocument> collapse_repeats(std::vector<TextDocument> snaps) {
  std::vector<TextDocument> out;
  for (TextDocument& d : snaps) {
    if (out.empty() || !(out.back() == d)) out.push_back(std::move(d));
  }
  return out;
}

inline ProcessRecord ingest_git(const TextDocument& before, const TextDocument& after,
                                const std::string& message, std::string id = {},
                                std::string language = {}) {
  if (before == after) {
    throw Error(Errc::kIdenticalSnapshots, "commit '" + id + "' does not change the file");
  }
  ProcessRecord r;
  r.id = std::move(id);
  r.source = Source::kGitCommit;
  r.snapshots = {before, after};
  r.language = std::move(language);
  r.metadata = message;
  return r;
}

struct Attempt {
  std::string code;
  std::string verdict;  // "AC" marks an accepted submission
};

struct Rejected {
  std::string reason;
};

inline bool is_accepted(std::string_view verdict) {
  return verdict == "AC" || verdict == "Accepted" || verdict == "accepted";
}

/// One user's attempts at a problem, cut at the first accepted one.
inline std::variant<ProcessRecord, Rejected> ingest_submissions(const std::vector<Attempt>& attempts,
                                                                std::string id = {},
                                                                std::string language = {},
                                                                std::optional<std::string> problem = {}) {
  std::vector<TextDocument> snaps;
  bool accepted = false;
  for (const Attempt& a : attempts) {
    snaps.emplace_back(a.code);
    if (is_accepted(a.verdict)) {
      accepted = true;
      break;
    }
  }
  if (!accepted) return Rejected{"no accepted submission"};
  snaps = collapse_repeats(std::move(snaps));
  if (snaps.size() < 2) return Rejected{"fewer than two distinct snapshots"};
  ProcessRecord r;
  r.id = std::move(id);
  r.source = Source::kOnlineSubmit;
  r.snapshots = std::move(snaps);
  r.language = std::move(language);
  r.metadata = std::move(problem);
  return r;
}

}  // namespace progassist::pipeline
