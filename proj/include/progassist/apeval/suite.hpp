#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progassist/conversation.hpp"
#include "progassist/conversation_json.hpp"
#include "progassist/error.hpp"
#include "progassist/pipeline/record.hpp"

// Suite manifest:
//   {"name": "...",
//    "tasks": [{"id": "C/0", "type": "C|HC|CU|HCU", "language": "python",
//               "history": ["...", ...],                        // HC, HCU only
//               "current": {"code": "...", "annotation": {...}}, // annotation optional
//               "user": "...",                                   // CU, HCU only
//               "entry_point": "f",
//               "base_tests": "...", "extra_tests": "...",
//               "reference_solution": "..."}]}                   // optional

namespace progassist::apeval {

using pipeline::SampleType;

inline constexpr std::size_t kCanonicalTaskCount = 164;
inline constexpr std::size_t kCanonicalPerType = 41;

struct BenchTask {
  std::string id;
  SampleType sample_type = SampleType::kC;
  std::string language = "python";
  std::vector<TextDocument> history;
  TextDocument current;
  TargetAnnotation annotation;
  std::optional<std::string> user;
  std::string entry_point;
  std::string base_tests;
  std::string extra_tests;
  std::optional<std::string> reference_solution;
};

struct BenchSuite {
  std::string name;
  std::vector<BenchTask> tasks;

  std::array<std::size_t, 4> counts() const {
    std::array<std::size_t, 4> c{};
    for (const BenchTask& t : tasks) ++c[static_cast<std::size_t>(t.sample_type)];
    return c;
  }
};

/// Throws SCHEMA_ERROR when the task's fields disagree with its type.
inline void check_task(const BenchTask& t) {
  const std::string where = "task '" + t.id + "'";
  if (t.id.empty()) throw Error(Errc::kSchemaError, "task without id");
  if (pipeline::has_history(t.sample_type) == t.history.empty()) {
    throw Error(Errc::kSchemaError, where + " of type " + std::string(pipeline::sample_type_name(t.sample_type)) +
                                        (t.history.empty() ? " lacks history" : " must not have history"));
  }
  if (pipeline::has_user(t.sample_type) != t.user.has_value()) {
    throw Error(Errc::kSchemaError, where + " of type " + std::string(pipeline::sample_type_name(t.sample_type)) +
                                        (t.user ? " must not have a user instruction" : " lacks a user instruction"));
  }
  try {
    (void)annotate_target(t.current.content(), t.annotation);
  } catch (const Error& e) {
    throw Error(Errc::kSchemaError, where + " has a bad annotation: " + e.detail());
  }
  if (t.entry_point.empty()) throw Error(Errc::kSchemaError, where + " has no entry point");
  for (const std::string* tests : {&t.base_tests, &t.extra_tests}) {
    if (tests->find(t.entry_point) == std::string::npos) {
      throw Error(Errc::kSchemaError, where + " has tests that never mention '" + t.entry_point + "'");
    }
  }
}

inline BenchTask task_from_json(const nlohmann::json& j) {
  BenchTask t;
  t.id = j.at("id").get<std::string>();
  t.sample_type = pipeline::parse_sample_type(j.at("type").get<std::string>());
  t.language = j.value("language", std::string("python"));
  if (j.contains("history")) {
    for (const auto& h : j.at("history")) t.history.emplace_back(h.get<std::string>());
  }
  const auto& cur = j.at("current");
  if (cur.is_string()) {
    t.current = TextDocument(cur.get<std::string>());
  } else {
    t.current = TextDocument(cur.at("code").get<std::string>());
    if (cur.contains("annotation")) t.annotation = annotation_from_json(cur.at("annotation"));
  }
  if (j.contains("user") && !j.at("user").is_null()) t.user = j.at("user").get<std::string>();
  t.entry_point = j.at("entry_point").get<std::string>();
  t.base_tests = j.at("base_tests").get<std::string>();
  t.extra_tests = j.value("extra_tests", t.base_tests);
  if (j.contains("reference_solution")) t.reference_solution = j.at("reference_solution").get<std::string>();
  return t;
}

inline nlohmann::json task_to_json(const BenchTask& t) {
  nlohmann::json j = {{"id", t.id},
                      {"type", pipeline::sample_type_name(t.sample_type)},
                      {"language", t.language}};
  if (!t.history.empty()) {
    j["history"] = nlohmann::json::array();
    for (const TextDocument& h : t.history) j["history"].push_back(h.content());
  }
  j["current"] = {{"code", t.current.content()}};
  if (!std::holds_alternative<std::monostate>(t.annotation)) {
    j["current"]["annotation"] = annotation_to_json(t.annotation);
  }
  if (t.user) j["user"] = *t.user;
  j["entry_point"] = t.entry_point;
  j["base_tests"] = t.base_tests;
  j["extra_tests"] = t.extra_tests;
  if (t.reference_solution) j["reference_solution"] = *t.reference_solution;
  return j;
}

struct LoadedSuite {
  BenchSuite suite;
  std::vector<std::string> warnings;
};

inline LoadedSuite parse_suite(const std::string& text, bool warn_non_canonical = true) {
  LoadedSuite out;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    out.suite.name = j.value("name", std::string());
    std::set<std::string> ids;
    for (const auto& tj : j.at("tasks")) {
      BenchTask t = task_from_json(tj);
      check_task(t);
      if (!ids.insert(t.id).second) throw Error(Errc::kSchemaError, "duplicate task id '" + t.id + "'");
      out.suite.tasks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kSchemaError, e.what());
  }
  const auto c = out.suite.counts();
  const bool canonical = out.suite.tasks.size() == kCanonicalTaskCount &&
                         std::all_of(c.begin(), c.end(), [](std::size_t n) { return n == kCanonicalPerType; });
  if (!canonical && warn_non_canonical) {
    std::ostringstream w;
    w << errc_name(Errc::kCountMismatch) << ": " << out.suite.tasks.size() << " tasks (";
    for (std::size_t i = 0; i < 4; ++i) {
      w << (i ? " / " : "") << pipeline::sample_type_name(pipeline::kAllSampleTypes[i]) << " " << c[i];
    }
    w << "), expected " << kCanonicalTaskCount << " with " << kCanonicalPerType << " per type";
    out.warnings.push_back(w.str());
  }
  return out;
}

inline LoadedSuite load_suite(const std::filesystem::path& path, bool warn_non_canonical = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open suite " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_suite(ss.str(), warn_non_canonical);
}

}  // namespace progassist::apeval
