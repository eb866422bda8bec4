#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "progassist/apeval/prompt.hpp"
#include "progassist/apeval/runner.hpp"
#include "progassist/apeval/suite.hpp"
#include "progassist/edit_formats.hpp"
#include "progassist/llm/client.hpp"

namespace progassist::apeval {

struct EvalOptions {
  Adapter adapter = Adapter::kNative;
  EditFormat format = EditFormat::kWholeFile;
  std::string model_id = "default";
  int max_tokens = 2048;
  double base_timeout_s = 10.0;
  double extra_timeout_s = 30.0;
  int memory_mb = 1024;
  std::size_t workers = 1;
  std::optional<std::int64_t> seed;
};

struct TaskResult {
  std::string id;
  SampleType sample_type = SampleType::kC;
  bool base_pass = false;
  bool extra_pass = false;
  std::string base_status;
  std::string extra_status;
  std::string reason;  // why the task failed before or during execution
};

struct PassCount {
  std::size_t base = 0;
  std::size_t extra = 0;
  std::size_t total = 0;
};

/// Percentage with one decimal, rounded half up on exact integers:
/// 28/41 -> "68.3".
inline std::string format_percent(std::size_t pass, std::size_t total) {
  if (total == 0) return "0.0";
  const unsigned long long tenths = (2000ULL * pass + total) / (2ULL * total);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

struct EvalReport {
  std::vector<TaskResult> tasks;  // suite order

  std::array<PassCount, 4> per_type() const {
    std::array<PassCount, 4> c{};
    for (const TaskResult& t : tasks) {
      PassCount& p = c[static_cast<std::size_t>(t.sample_type)];
      ++p.total;
      p.base += t.base_pass;
      p.extra += t.extra_pass;
    }
    return c;
  }

  /// Micro average over all tasks.
  PassCount overall() const {
    PassCount all;
    for (const PassCount& p : per_type()) {
      all.base += p.base;
      all.extra += p.extra;
      all.total += p.total;
    }
    return all;
  }
};

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json types = nlohmann::json::object();
  const auto counts = r.per_type();
  auto entry = [](const PassCount& p) {
    return nlohmann::json{{"base_pass", p.base},
                          {"extra_pass", p.extra},
                          {"total", p.total},
                          {"base", format_percent(p.base, p.total)},
                          {"extra", format_percent(p.extra, p.total)}};
  };
  for (SampleType t : pipeline::kAllSampleTypes) {
    types[std::string(pipeline::sample_type_name(t))] = entry(counts[static_cast<std::size_t>(t)]);
  }
  nlohmann::json tasks = nlohmann::json::array();
  for (const TaskResult& t : r.tasks) {
    nlohmann::json tj = {{"id", t.id},
                         {"type", pipeline::sample_type_name(t.sample_type)},
                         {"base_pass", t.base_pass},
                         {"extra_pass", t.extra_pass},
                         {"base_status", t.base_status},
                         {"extra_status", t.extra_status}};
    if (!t.reason.empty()) tj["reason"] = t.reason;
    tasks.push_back(std::move(tj));
  }
  return {{"types", types}, {"average", entry(r.overall())}, {"tasks", tasks}};
}

/// Aligned table of "base (extra)" Pass@1 percentages.
inline std::string report_to_text(const EvalReport& r) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s %6s  %-15s\n", "type", "tasks", "pass@1");
  out << buf;
  auto row = [&](const std::string& name, const PassCount& p) {
    const std::string cell = format_percent(p.base, p.total) + " (" + format_percent(p.extra, p.total) + ")";
    std::snprintf(buf, sizeof buf, "%-6s %6zu  %-15s\n", name.c_str(), p.total, cell.c_str());
    out << buf;
  };
  const auto counts = r.per_type();
  for (SampleType t : pipeline::kAllSampleTypes) {
    row(std::string(pipeline::sample_type_name(t)), counts[static_cast<std::size_t>(t)]);
  }
  row("avg", r.overall());
  return out.str();
}

inline llm::ChatRequest make_eval_request(const BenchTask& task, const EvalOptions& opts) {
  llm::ChatRequest req;
  req.model_id = opts.model_id;
  req.temperature = 0.0;  // greedy
  req.max_tokens = opts.max_tokens;
  req.seed = opts.seed;
  req.messages = render_prompt(task, opts.adapter, opts.format).as_messages();
  return req;
}

/// Turns a model reply into the program to execute. The native adapter
/// with an edit format other than whole-file applies the edit to the
/// current code.
inline std::string candidate_program(const BenchTask& task, const std::string& reply, const EvalOptions& opts) {
  if (opts.adapter == Adapter::kNative && opts.format != EditFormat::kWholeFile) {
    const auto payload = extract_payload(reply);
    if (!payload || trim(*payload).empty()) throw Error(Errc::kEmptyCandidate, "reply holds no code change");
    return apply_rendered({opts.format, *payload}, task.current).content();
  }
  return extract_code(reply);
}

inline TaskResult evaluate_task(const BenchTask& task, llm::ChatBackend& client, Runner& runner,
                                const EvalOptions& opts) {
  TaskResult r{task.id, task.sample_type, false, false, "not run", "not run", ""};
  std::string program;
  try {
    program = candidate_program(task, client.complete(make_eval_request(task, opts)), opts);
  } catch (const Error& e) {
    r.reason = e.what();
    return r;
  }
  const ExecResult base = runner.run({program, task.base_tests, task.entry_point, opts.base_timeout_s, opts.memory_mb});
  const ExecResult extra =
      runner.run({program, task.extra_tests, task.entry_point, opts.extra_timeout_s, opts.memory_mb});
  r.base_status = exec_status_name(base.status);
  r.extra_status = exec_status_name(extra.status);
  r.base_pass = base.status == ExecStatus::kPass;
  r.extra_pass = extra.status == ExecStatus::kPass;
  if (!r.base_pass) r.reason = base.stderr_tail;
  else if (!r.extra_pass) r.reason = extra.stderr_tail;
  return r;
}

/// One greedy completion per task, executed against base and extra tests.
/// Failures of any kind are recorded per task; the run never aborts.
inline EvalReport evaluate(const BenchSuite& suite, llm::ChatBackend& client, Runner& runner,
                           const EvalOptions& opts = {}) {
  if (opts.workers < 1) throw Error(Errc::kInvalidArgument, "worker count must be at least 1");
  EvalReport report;
  report.tasks.resize(suite.tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < suite.tasks.size();) {
      try {
        report.tasks[i] = evaluate_task(suite.tasks[i], client, runner, opts);
      } catch (const std::exception& e) {
        report.tasks[i] = {suite.tasks[i].id, suite.tasks[i].sample_type, false, false, "error", "error", e.what()};
      }
    }
  };
  const std::size_t n = std::min(opts.workers, std::max<std::size_t>(suite.tasks.size(), 1));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return report;
}

/// Model stub answering every task with its reference solution, in the
/// shape the adapter expects.
inline std::shared_ptr<llm::ChatBackend> make_oracle_backend(const BenchSuite& suite, const EvalOptions& opts) {
  auto answers = std::make_shared<std::map<std::string, std::string>>();
  for (const BenchTask& t : suite.tasks) {
    if (!t.reference_solution) continue;
    llm::ChatRequest req;
    try {
      req = make_eval_request(t, opts);
    } catch (const Error&) {
      continue;  // evaluate() records the failure for this task
    }
    std::string body;
    if (opts.adapter == Adapter::kNative && opts.format != EditFormat::kWholeFile) {
      body = render_edit(t.current, TextDocument(*t.reference_solution), opts.format).payload;
    } else {
      body = fenced(*t.reference_solution, t.language);
    }
    (*answers)[llm::request_digest(req)] =
        std::string(tokens::kNextStart) + body + std::string(tokens::kNextEnd);
  }
  return std::make_shared<llm::FunctionBackend>([answers](const llm::ChatRequest& req) {
    auto it = answers->find(llm::request_digest(req));
    return it == answers->end() ? std::string() : it->second;
  });
}

/// Model stub that always answers with nothing.
inline std::shared_ptr<llm::ChatBackend> make_null_backend() {
  return std::make_shared<llm::FunctionBackend>([](const llm::ChatRequest&) { return std::string(); });
}

}  // namespace progassist::apeval
