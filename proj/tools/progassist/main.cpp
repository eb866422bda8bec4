// progassist: command-line front end for the edit codecs, conversation
// rendering, the synthesis pipeline, evaluation and packing.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "progassist/progassist.hpp"

namespace fs = std::filesystem;
using namespace progassist;

namespace {

constexpr int kExitOperational = 1;
constexpr int kExitUsage = 2;

std::string read_file(const fs::path& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << text;
}

struct Common {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool json = false;
  std::string format = "wf";
  std::string endpoint;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "default";
  std::string cassette;
  bool record = false;
  double timeout_s = 60;
  int retries = 2;
};

/// Live endpoint, optionally wrapped by a cassette; replay needs no endpoint.
std::shared_ptr<llm::ChatBackend> build_backend(const Common& c) {
  std::shared_ptr<llm::ChatBackend> live;
  if (!c.endpoint.empty()) {
    llm::BackendConfig cfg;
    cfg.base_url = c.endpoint;
    cfg.api_key_env = c.api_key_env;
    cfg.timeout_s = c.timeout_s;
    cfg.max_retries = c.retries;
    cfg.max_in_flight = static_cast<int>(c.workers);
    live = std::make_shared<llm::HttpBackend>(cfg);
  }
  if (!c.cassette.empty()) {
    if (c.record) return llm::record_replay(llm::CassetteMode::kRecord, c.cassette, live);
    return llm::record_replay(llm::CassetteMode::kReplay, c.cassette);
  }
  if (!live) throw Error(Errc::kInvalidArgument, "no model backend: give --endpoint or --cassette");
  return live;
}

void add_backend_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--endpoint", c.endpoint, "Chat-completions base URL, e.g. http://127.0.0.1:8000/v1");
  cmd->add_option("--api-key-env", c.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--model", c.model, "Model id sent with each request")->capture_default_str();
  cmd->add_option("--cassette", c.cassette, "Replay responses from this JSONL cassette");
  cmd->add_flag("--record", c.record, "Record live responses into --cassette instead of replaying");
  cmd->add_option("--timeout", c.timeout_s, "Per-request timeout in seconds")->capture_default_str();
  cmd->add_option("--retries", c.retries, "Retries on transient failures")->capture_default_str();
}

CLI::Option* add_format_option(CLI::App* cmd, Common& c) {
  return cmd->add_option("--format", c.format, "Edit format")
      ->check(CLI::IsMember({"wf", "ud", "lc", "sr"}))
      ->capture_default_str();
}

// ------------------------------------------------------------------ diff/apply

int run_diff(const Common& c, const std::string& old_path, const std::string& new_path) {
  const TextDocument old_doc(read_file(old_path));
  const TextDocument new_doc(read_file(new_path));
  const RenderedEdit edit = render_edit(old_doc, new_doc, parse_format_name(c.format));
  if (c.json) {
    std::cout << nlohmann::json{{"format", c.format}, {"payload", edit.payload}}.dump() << '\n';
  } else {
    std::cout << edit.payload;
  }
  return 0;
}

int run_apply(const Common& c, const std::string& old_path, const std::string& edit_path) {
  const TextDocument old_doc(read_file(old_path));
  const TextDocument result = apply_rendered({parse_format_name(c.format), read_file(edit_path)}, old_doc);
  if (c.json) {
    std::cout << nlohmann::json{{"content", result.content()}}.dump() << '\n';
  } else {
    std::cout << result.content();
  }
  return 0;
}

// ---------------------------------------------------------------------- render

int run_render(const Common& c, const std::string& path, std::optional<std::size_t> window, bool prompt) {
  Conversation conv = conversation_from_json_text(read_file(path));
  if (window) conv = window_history(conv, *window);
  std::string text = render_template(conv, parse_format_name(c.format));
  if (prompt) text += assistant_generation_prompt();
  if (c.json) {
    std::cout << nlohmann::json{{"format", c.format}, {"text", text}}.dump() << '\n';
  } else {
    std::cout << text;
  }
  return 0;
}

// ------------------------------------------------------------------------ pack

LengthCounter make_counter(const std::string& spec) {
  if (spec == "whitespace") return count_whitespace_tokens;
  if (spec == "bytes") return count_bytes;
  if (spec.rfind("cmd:", 0) == 0) return subprocess_counter(spec.substr(4));
  throw Error(Errc::kInvalidArgument, "unknown counter '" + spec + "' (whitespace, bytes, cmd:<command>)");
}

int run_pack(const Common& c, const std::string& path, std::size_t capacity, const std::string& counter_spec,
             const std::string& out_path) {
  const LengthCounter counter = make_counter(counter_spec);
  std::vector<SizedItem<std::string>> items;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(Errc::kSchemaError, path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    try {
      if (j.contains("length")) {
        // {"id": ..., "length": n}; ids may be numbers
        const auto& id = j.at("id");
        items.push_back({id.is_string() ? id.get<std::string>() : id.dump(), j.at("length").get<std::size_t>()});
      } else {
        const pipeline::TrainingSample s = pipeline::sample_from_json(j);
        items.push_back(pipeline::measure(s, counter, s.provenance.record_id + "#" +
                                                          std::to_string(s.provenance.sample_index)));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kSchemaError, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto bins = pack_ffd(std::move(items), capacity);
  std::ostringstream out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& it : bins[b].items) ids.push_back(it.id);
    out << nlohmann::json{{"bin", b}, {"used", bins[b].used()}, {"capacity", capacity}, {"ids", ids}}.dump()
        << '\n';
  }
  if (!out_path.empty()) write_file(out_path, out.str());
  if (c.json) {
    std::cout << nlohmann::json{{"bins", bins.size()}, {"capacity", capacity}}.dump() << '\n';
  } else if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::cout << bins.size() << " bins\n";
  }
  return 0;
}

// ----------------------------------------------------------------------- synth

struct SynthArgs {
  std::vector<std::string> inputs;
  std::string out = "samples.jsonl";
  std::string discards;
  std::string stats;
  std::string prompts_dir;
  std::optional<std::size_t> window;
  std::size_t per_record = 1;
  double decay = 0.9;
  std::optional<double> decompose;
  bool reasoning = false;
  bool judge_user = false;
  bool mock = false;
  double mock_keep = 0.75;
};

int run_synth(const Common& c, const SynthArgs& a) {
  pipeline::LoadedInputs inputs;
  for (const std::string& path : a.inputs) {
    pipeline::LoadedInputs more = pipeline::load_inputs(fs::path(path));
    for (auto& item : more.items) inputs.items.push_back(std::move(item));
    for (auto& r : more.rejected) inputs.rejected.push_back(std::move(r));
  }
  std::shared_ptr<llm::ChatBackend> backend;
  if (a.mock) {
    backend = std::make_shared<pipeline::MockSynthesisBackend>(a.mock_keep);
  } else {
    backend = build_backend(c);
  }
  const pipeline::PromptTemplates prompts =
      a.prompts_dir.empty() ? pipeline::PromptTemplates{} : pipeline::PromptTemplates::load(a.prompts_dir);

  pipeline::DriverOptions opts;
  opts.global_seed = c.seed;
  opts.workers = c.workers;
  opts.samples_per_record = a.per_record;
  opts.decay = a.decay;
  opts.decompose_probability = a.decompose;
  opts.assemble.format = parse_format_name(c.format);
  opts.assemble.window = a.window;
  opts.assemble.with_reasoning = a.reasoning;
  opts.assemble.judge_user_types = a.judge_user;
  opts.llm.model_id = c.model;

  pipeline::SynthResult result = pipeline::run_pipeline(inputs.items, opts, *backend, prompts);
  pipeline::emit_jsonl(result.samples, fs::path(a.out));

  std::vector<pipeline::DiscardEntry> discards = inputs.rejected;
  discards.insert(discards.end(), result.discards.begin(), result.discards.end());
  if (!a.discards.empty()) {
    std::ostringstream d;
    for (const auto& e : discards) d << pipeline::discard_to_json(e).dump() << '\n';
    write_file(a.discards, d.str());
  }
  nlohmann::json stats = pipeline::stats_to_json(result.stats);
  stats["rejected_inputs"] = inputs.rejected.size();
  stats["seed"] = c.seed;
  if (!a.stats.empty()) write_file(a.stats, stats.dump(2) + "\n");
  if (c.json) {
    std::cout << stats.dump() << '\n';
  } else {
    std::cerr << pipeline::stats_to_text(result.stats);
    if (!inputs.rejected.empty()) std::cerr << "  rejected inputs " << inputs.rejected.size() << '\n';
  }
  if (result.samples.empty()) {
    std::cerr << "progassist: no samples emitted\n";
    return kExitOperational;
  }
  return 0;
}

// ------------------------------------------------------------------------ eval

struct EvalArgs {
  std::string suite;
  std::string adapter = "native";
  std::string model_stub;  // oracle | null
  std::vector<std::string> runner_cmd;
  bool stub_runner = false;
  bool allow_noncanonical = false;
  std::string out;
  double base_timeout = 10;
  double extra_timeout = 30;
  int memory_mb = 1024;
};

int run_eval(const Common& c, const EvalArgs& a) {
  const apeval::LoadedSuite loaded = apeval::load_suite(a.suite, !a.allow_noncanonical);
  for (const std::string& w : loaded.warnings) std::cerr << "progassist: warning: " << w << '\n';

  apeval::EvalOptions opts;
  opts.adapter = apeval::parse_adapter(a.adapter);
  opts.format = parse_format_name(c.format);
  opts.model_id = c.model;
  opts.workers = c.workers;
  opts.base_timeout_s = a.base_timeout;
  opts.extra_timeout_s = a.extra_timeout;
  opts.memory_mb = a.memory_mb;
  if (c.seed != 0) opts.seed = static_cast<std::int64_t>(c.seed & 0x7fffffffffffffffULL);

  std::shared_ptr<llm::ChatBackend> backend;
  if (a.model_stub == "oracle") {
    backend = apeval::make_oracle_backend(loaded.suite, opts);
  } else if (a.model_stub == "null") {
    backend = apeval::make_null_backend();
  } else {
    backend = build_backend(c);
  }

  std::unique_ptr<apeval::Runner> runner;
  if (a.stub_runner) {
    runner = std::make_unique<apeval::ReferenceMatchRunner>(loaded.suite);
  } else {
    std::vector<std::string> cmd = a.runner_cmd;
    if (cmd.empty()) {
      const char* env = std::getenv("PROGASSIST_RUNNER");
      if (!env || !*env) {
        throw Error(Errc::kInvalidArgument, "no runner: give --runner, set PROGASSIST_RUNNER, or use --stub-runner");
      }
      std::istringstream words(env);
      for (std::string w; words >> w;) cmd.push_back(w);
    }
    runner = std::make_unique<apeval::SubprocessRunner>(cmd);
  }

  const apeval::EvalReport report = apeval::evaluate(loaded.suite, *backend, *runner, opts);
  const nlohmann::json j = apeval::report_to_json(report);
  if (!a.out.empty()) write_file(a.out, j.dump(2) + "\n");
  if (c.json) {
    std::cout << j.dump() << '\n';
  } else {
    std::cout << apeval::report_to_text(report);
  }
  return 0;
}

int run_prompts_dump(const std::string& dir) {
  fs::create_directories(dir);
  const pipeline::PromptTemplates t;
  for (const auto& [name, text] : t.texts) write_file(fs::path(dir) / (name + ".txt"), text);
  std::cout << t.texts.size() << " templates written to " << dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Programming-assistant data and evaluation toolkit"};
  app.set_config("--config", "", "Read options from a TOML/INI file (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--seed", c.seed, "Global seed recorded into all provenance")->capture_default_str();
  app.add_option("--workers", c.workers, "Worker count")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--json", c.json, "Machine-readable output");

  std::string a_path, b_path;
  auto* diff = app.add_subcommand("diff", "Render the edit from OLD to NEW");
  add_format_option(diff, c);
  diff->add_option("old", a_path, "Original file ('-' for stdin)")->required();
  diff->add_option("new", b_path, "Modified file")->required();

  auto* apply = app.add_subcommand("apply", "Apply a rendered edit to a file");
  add_format_option(apply, c);
  apply->add_option("old", a_path, "Original file")->required();
  apply->add_option("edit", b_path, "Rendered edit ('-' for stdin)")->required();

  std::optional<std::size_t> window;
  bool gen_prompt = false;
  auto* render = app.add_subcommand("render", "Render a conversation JSON file through the chat template");
  add_format_option(render, c);
  render->add_option("conversation", a_path, "Conversation JSON")->required();
  render->add_option("--window", window, "Keep only the newest K history messages")->check(CLI::PositiveNumber);
  render->add_flag("--generation-prompt", gen_prompt, "Append the opening of the assistant turn");

  std::size_t capacity = 0;
  std::string counter = "whitespace", pack_out;
  auto* pack = app.add_subcommand("pack", "Pack samples into fixed-capacity bins (first-fit decreasing)");
  pack->add_option("input", a_path, "Sample JSONL, or JSONL of {id, length}")->required();
  pack->add_option("--capacity", capacity, "Bin capacity")->required()->check(CLI::PositiveNumber);
  pack->add_option("--counter", counter, "whitespace | bytes | cmd:<command>")->capture_default_str();
  pack->add_option("-o,--out", pack_out, "Write the bin manifest here instead of stdout");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Turn coding-process records into training samples");
  add_format_option(synth, c);
  add_backend_options(synth, c);
  synth->add_option("inputs", sa.inputs, "Input JSONL files")->required()->check(CLI::ExistingFile);
  synth->add_option("-o,--out", sa.out, "Sample JSONL output")->capture_default_str();
  synth->add_option("--discards", sa.discards, "Discard log JSONL");
  synth->add_option("--stats", sa.stats, "Summary statistics JSON");
  synth->add_option("--prompts", sa.prompts_dir, "Directory of prompt template overrides")
      ->check(CLI::ExistingDirectory);
  synth->add_option("--window", sa.window, "Keep only the newest K history snapshots")->check(CLI::PositiveNumber);
  synth->add_option("--samples-per-record", sa.per_record, "Samples drawn per record")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--decay", sa.decay, "Time-point weight decay")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--decompose", sa.decompose, "Decomposition probability for every source")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--reasoning", sa.reasoning, "Place the chat before the code change");
  synth->add_flag("--judge-user-types", sa.judge_user, "Judge change segments for samples with an instruction too");
  synth->add_flag("--mock", sa.mock, "Use the built-in offline mock model");
  synth->add_option("--mock-keep", sa.mock_keep, "Mock judge keep rate")->check(CLI::Range(0.0, 1.0));

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Run a benchmark suite and report Pass@1");
  add_format_option(eval, c);
  add_backend_options(eval, c);
  eval->add_option("--suite", ea.suite, "Suite manifest JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--adapter", ea.adapter, "Prompt adapter")
      ->check(CLI::IsMember({"native", "base", "instruct"}))
      ->capture_default_str();
  eval->add_option("--stub-model", ea.model_stub, "Offline model stub instead of a backend")
      ->check(CLI::IsMember({"oracle", "null"}));
  eval->add_option("--runner", ea.runner_cmd, "Runner command (default: $PROGASSIST_RUNNER)")->expected(1, -1);
  eval->add_flag("--stub-runner", ea.stub_runner, "In-process runner that accepts exactly the reference solutions");
  eval->add_flag("--allow-noncanonical", ea.allow_noncanonical, "Do not warn about suite size");
  eval->add_option("-o,--out", ea.out, "Write the JSON report here");
  eval->add_option("--base-timeout", ea.base_timeout, "Seconds per base-test run")->capture_default_str();
  eval->add_option("--extra-timeout", ea.extra_timeout, "Seconds per extra-test run")->capture_default_str();
  eval->add_option("--memory-mb", ea.memory_mb, "Memory limit per run")->capture_default_str();

  std::string prompt_dir;
  auto* prompts = app.add_subcommand("prompts", "Write the default prompt templates to a directory");
  prompts->add_option("dir", prompt_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*diff) return run_diff(c, a_path, b_path);
    if (*apply) return run_apply(c, a_path, b_path);
    if (*render) return run_render(c, a_path, window, gen_prompt);
    if (*pack) return run_pack(c, a_path, capacity, counter, pack_out);
    if (*synth) return run_synth(c, sa);
    if (*eval) return run_eval(c, ea);
    if (*prompts) return run_prompts_dump(prompt_dir);
  } catch (const Error& e) {
    std::cerr << "progassist: " << e.what() << '\n';
    return e.code() == Errc::kInvalidArgument ? kExitUsage : kExitOperational;
  } catch (const std::exception& e) {
    std::cerr << "progassist: " << e.what() << '\n';
    return kExitOperational;
  }
  return kExitUsage;
}
