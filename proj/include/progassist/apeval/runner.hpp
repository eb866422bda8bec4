#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "progassist/apeval/suite.hpp"
#include "progassist/conversation.hpp"
#include "progassist/error.hpp"

// Runner wire protocol (version 1): one JSON job on stdin, one JSON result
// on stdout.
//   job:    {"version": 1, "solution_code": "...", "test_code": "...",
//            "entry_point": "f", "timeout_s": 10.0, "memory_mb": 1024}
//   result: {"version": 1, "status": "pass|fail|timeout|error",
//            "stderr_tail": "...", "wall_time_s": 0.12}

namespace progassist::apeval {

inline constexpr int kRunnerProtocolVersion = 1;
inline constexpr std::size_t kStderrTail = 2000;

struct ExecJob {
  std::string solution_code;
  std::string test_code;
  std::string entry_point;
  double timeout_s = 10.0;
  int memory_mb = 1024;
};

enum class ExecStatus { kPass, kFail, kTimeout, kError };

inline std::string_view exec_status_name(ExecStatus s) {
  switch (s) {
    case ExecStatus::kPass: return "pass";
    case ExecStatus::kFail: return "fail";
    case ExecStatus::kTimeout: return "timeout";
    case ExecStatus::kError: return "error";
  }
  return "error";
}

inline ExecStatus parse_exec_status(std::string_view name) {
  for (ExecStatus s : {ExecStatus::kPass, ExecStatus::kFail, ExecStatus::kTimeout, ExecStatus::kError}) {
    if (exec_status_name(s) == name) return s;
  }
  throw Error(Errc::kMalformedResponse, "unknown runner status '" + std::string(name) + "'");
}

struct ExecResult {
  ExecStatus status = ExecStatus::kError;
  std::string stderr_tail;
  double wall_time_s = 0;
};

inline nlohmann::json job_to_json(const ExecJob& job) {
  if (!(job.timeout_s > 0)) throw Error(Errc::kInvalidArgument, "runner timeout must be positive");
  if (job.memory_mb <= 0) throw Error(Errc::kInvalidArgument, "runner memory limit must be positive");
  return {{"version", kRunnerProtocolVersion}, {"solution_code", job.solution_code},
          {"test_code", job.test_code},       {"entry_point", job.entry_point},
          {"timeout_s", job.timeout_s},       {"memory_mb", job.memory_mb}};
}

inline ExecJob job_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kRunnerProtocolVersion) {
    throw Error(Errc::kSchemaVersion, "runner job version " + j.at("version").dump());
  }
  return {j.at("solution_code").get<std::string>(), j.at("test_code").get<std::string>(),
          j.at("entry_point").get<std::string>(), j.at("timeout_s").get<double>(), j.at("memory_mb").get<int>()};
}

inline std::string tail(std::string_view s, std::size_t n = kStderrTail) {
  return std::string(s.size() > n ? s.substr(s.size() - n) : s);
}

inline nlohmann::json result_to_json(const ExecResult& r) {
  return {{"version", kRunnerProtocolVersion},
          {"status", exec_status_name(r.status)},
          {"stderr_tail", tail(r.stderr_tail)},
          {"wall_time_s", r.wall_time_s}};
}

/// Parses a runner's stdout; anything off-protocol is MALFORMED_RESPONSE.
inline ExecResult result_from_text(std::string_view text) {
  const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::kMalformedResponse, "runner printed no JSON result");
  }
  try {
    if (j.at("version").get<int>() != kRunnerProtocolVersion) {
      throw Error(Errc::kSchemaVersion, "runner result version " + j.at("version").dump());
    }
    ExecResult r;
    r.status = parse_exec_status(j.at("status").get<std::string>());
    r.stderr_tail = j.value("stderr_tail", std::string());
    r.wall_time_s = j.value("wall_time_s", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kMalformedResponse, std::string("bad runner result: ") + e.what());
  }
}

class Runner {
 public:
  virtual ~Runner() = default;
  /// Never throws for candidate misbehavior; infrastructure trouble comes
  /// back as status error with a reason.
  virtual ExecResult run(const ExecJob& job) = 0;
};

namespace detail {

struct ProcessOutput {
  int exit_code = -1;
  bool killed = false;
  std::string out;
  std::string err;
};

/// Runs argv with `input` on stdin, killing it after `deadline_s`.
inline ProcessOutput run_process(const std::vector<std::string>& argv, const std::string& input,
                                 double deadline_s) {
  if (argv.empty()) throw Error(Errc::kInvalidArgument, "empty runner command");
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe(in_pipe) || ::pipe(out_pipe) || ::pipe(err_pipe)) {
    throw Error(Errc::kIo, std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::kIo, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::dup2(err_pipe[1], 2);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    std::vector<char*> args;
    for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    std::fprintf(stderr, "cannot exec %s: %s\n", args[0], std::strerror(errno));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::signal(SIGPIPE, SIG_IGN);

  ProcessOutput result;
  std::size_t written = 0;
  int in_fd = in_pipe[1];
  ::fcntl(in_fd, F_SETFL, O_NONBLOCK);
  if (input.empty()) {
    ::close(in_fd);
    in_fd = -1;
  }
  bool out_open = true, err_open = true;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(deadline_s);
  while (out_open || err_open) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      result.killed = true;
      break;
    }
    pollfd fds[3];
    nfds_t n = 0;
    if (out_open) fds[n++] = {out_pipe[0], POLLIN, 0};
    if (err_open) fds[n++] = {err_pipe[0], POLLIN, 0};
    if (in_fd >= 0) fds[n++] = {in_fd, POLLOUT, 0};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    if (::poll(fds, n, static_cast<int>(std::min<long long>(left + 1, 1000))) < 0 && errno != EINTR) break;
    for (nfds_t k = 0; k < n; ++k) {
      if (!fds[k].revents) continue;
      if (fds[k].fd == in_fd) {
        const ssize_t w = ::write(in_fd, input.data() + written, input.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if (w < 0 && errno != EAGAIN) written = input.size();
        if (written >= input.size()) {
          ::close(in_fd);
          in_fd = -1;
        }
        continue;
      }
      char buf[4096];
      const ssize_t r = ::read(fds[k].fd, buf, sizeof buf);
      std::string& sink = fds[k].fd == out_pipe[0] ? result.out : result.err;
      if (r > 0) {
        sink.append(buf, static_cast<std::size_t>(r));
      } else {
        (fds[k].fd == out_pipe[0] ? out_open : err_open) = false;
      }
    }
  }
  if (in_fd >= 0) ::close(in_fd);
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

}  // namespace detail

/// Launches the external runner once per job and speaks the JSON protocol.
class SubprocessRunner : public Runner {
 public:
  /// `grace_s` is how long past the job's own timeout we wait for the runner.
  explicit SubprocessRunner(std::vector<std::string> command, double grace_s = 5.0)
      : command_(std::move(command)), grace_s_(grace_s) {}

  ExecResult run(const ExecJob& job) override {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const detail::ProcessOutput p = detail::run_process(command_, job_to_json(job).dump(), job.timeout_s + grace_s_);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (p.killed) return {ExecStatus::kTimeout, tail("runner did not answer in time\n" + p.err), wall};
      if (p.exit_code != 0) {
        return {ExecStatus::kError,
                tail("runner exited with code " + std::to_string(p.exit_code) + "\n" + p.err), wall};
      }
      return result_from_text(p.out);
    } catch (const Error& e) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return {ExecStatus::kError, tail(e.what()), wall};
    }
  }

 private:
  std::vector<std::string> command_;
  double grace_s_;
};

/// In-process stand-in for the runner: a job passes when its solution
/// matches the reference solution of the task owning its tests. Lets the
/// harness run without any interpreter.
class ReferenceMatchRunner : public Runner {
 public:
  explicit ReferenceMatchRunner(const BenchSuite& suite) {
    for (const BenchTask& t : suite.tasks) {
      if (!t.reference_solution) continue;
      references_[t.base_tests] = normalize(*t.reference_solution);
      references_[t.extra_tests] = normalize(*t.reference_solution);
    }
  }

  ExecResult run(const ExecJob& job) override {
    auto it = references_.find(job.test_code);
    if (it == references_.end()) return {ExecStatus::kError, "no reference solution for these tests", 0.0};
    if (normalize(job.solution_code) == it->second) return {ExecStatus::kPass, "", 0.0};
    return {ExecStatus::kFail, "solution differs from the reference", 0.0};
  }

 private:
  static std::string normalize(std::string_view code) { return trim(TextDocument::normalize(code)); }

  std::map<std::string, std::string> references_;
};

/// Runner backed by a callable, for tests.
class FunctionRunner : public Runner {
 public:
  explicit FunctionRunner(std::function<ExecResult(const ExecJob&)> fn) : fn_(std::move(fn)) {}
  ExecResult run(const ExecJob& job) override { return fn_(job); }

 private:
  std::function<ExecResult(const ExecJob&)> fn_;
};

}  // namespace progassist::apeval
