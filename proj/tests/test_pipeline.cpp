#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "progassist/pipeline/driver.hpp"
#include "progassist/pipeline/measure.hpp"
#include "progassist/pipeline/mock_backend.hpp"
#include "test_support.hpp"
#include "toy_records.hpp"

using namespace progassist;
using namespace progassist::pipeline;

namespace {

const TextDocument kRenameOld("a = 1\nb = 2\nc = a + b\n");
const TextDocument kRenameNew("i = 1\nj = 2\nk = i + j\n");

// Twelve lines with edits on lines 2 and 10.
TextDocument twelve(bool edited) {
  std::string s;
  for (int i = 1; i <= 12; ++i) {
    s += (edited && (i == 2 || i == 10)) ? "changed " + std::to_string(i) + "\n" : "line " + std::to_string(i) + "\n";
  }
  return TextDocument(s);
}

// Replies per request kind; the kind is read from the system prompt.
struct Script {
  std::string judge = "**Decision:** `True`";
  std::string instruction = "```\n**instruction:** rename variables\n```";
  std::string chat = "```\n**chat:** I renamed the variables.\n```";
  std::string history = "```\nx\n```";
  int calls = 0;

  llm::FunctionBackend backend() {
    return llm::FunctionBackend([this](const llm::ChatRequest& r) {
      ++calls;
      const std::string& sys = r.messages.front().content;
      if (sys.find("**Decision:**") != std::string::npos) return judge;
      if (sys.find("**instruction:**") != std::string::npos) return instruction;
      if (sys.find("**chat:**") != std::string::npos) return chat;
      return history;
    });
  }
};

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kInvalidArgument;
}

ProcessRecord record_of(std::vector<std::string> snaps, Source src = Source::kGitCommit) {
  ProcessRecord r;
  r.id = "r";
  r.source = src;
  for (auto& s : snaps) r.snapshots.emplace_back(s);
  return r;
}

const PromptTemplates kPrompts;
const LlmSettings kSettings;

}  // namespace

TEST(Ingest, Git) {
  const ProcessRecord r = ingest_git(TextDocument("v1\n"), TextDocument("v2\n"), "fix bug");
  ASSERT_EQ(r.snapshots.size(), 2u);
  EXPECT_EQ(r.metadata, "fix bug");
  EXPECT_EQ(code_of([] { ingest_git(TextDocument("v\n"), TextDocument("v\n"), "x"); }), Errc::kIdenticalSnapshots);
  EXPECT_EQ(ingest_git(TextDocument(""), TextDocument("new\n"), "create").snapshots.size(), 2u);
}

TEST(Ingest, Submissions) {
  auto ok = ingest_submissions({{"a", "WA"}, {"b", "AC"}});
  ASSERT_TRUE(std::holds_alternative<ProcessRecord>(ok));
  EXPECT_EQ(std::get<ProcessRecord>(ok).snapshots.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<Rejected>(ingest_submissions({{"a", "WA"}, {"b", "WA"}})));
  EXPECT_TRUE(std::holds_alternative<Rejected>(ingest_submissions({{"a", "AC"}})));
  // Attempts after the first accepted one are not part of the process.
  auto cut = ingest_submissions({{"a", "WA"}, {"b", "AC"}, {"c", "AC"}});
  EXPECT_EQ(std::get<ProcessRecord>(cut).final_snippet().content(), "b");
}

TEST(GenHistoryAi, TwoBlocksEndingInSeed) {
  Script s;
  s.history = "First:\n```python\ndef f():\n```\nThen:\n```python\ndef f():\n    return 1\n```\n";
  auto b = s.backend();
  const ProcessRecord r =
      gen_history_ai(TextDocument("def f():\n    return 1\n"), Persona::kNovice, b, kPrompts, kSettings, 1);
  ASSERT_EQ(r.snapshots.size(), 2u);
  EXPECT_FALSE(r.repaired);
  EXPECT_EQ(r.source, Source::kAiProgrammer);
  EXPECT_EQ(r.persona, Persona::kNovice);
}

TEST(GenHistoryAi, ProseOnlyIsUnparseable) {
  Script s;
  s.history = "I would start by thinking about the problem.";
  auto b = s.backend();
  EXPECT_EQ(code_of([&] { gen_history_ai(TextDocument("x = 1\n"), Persona::kExpert, b, kPrompts, kSettings, 1); }),
            Errc::kUnparseableHistory);
  EXPECT_EQ(s.calls, kSettings.parse_retries + 1);
}

TEST(GenHistoryAi, DriftedFinalBlockIsRepaired) {
  Script s;
  s.history = "```\nx = 0\n```\n```\nx = 2\n```\n";
  auto b = s.backend();
  const ProcessRecord r = gen_history_ai(TextDocument("x = 1\n"), Persona::kOrdinary, b, kPrompts, kSettings, 1);
  EXPECT_TRUE(r.repaired);
  EXPECT_EQ(r.final_snippet().content(), "x = 1\n");
  EXPECT_EQ(r.snapshots.front().content(), "x = 0\n");
}

TEST(Decompose, SingleHunkUnchanged) {
  Rng rng(1);
  const ProcessRecord r = record_of({"a\n", "b\n"});
  EXPECT_EQ(decompose(r, 1.0, rng).snapshots, r.snapshots);
}

TEST(Decompose, ZeroProbabilityUnchanged) {
  Rng rng(1);
  const ProcessRecord r = record_of({"1\n2\n3\n4\n5\n", "x\n2\ny\n4\nz\n"});
  EXPECT_EQ(decompose(r, 0.0, rng).snapshots, r.snapshots);
}

TEST(Decompose, ThreeHunksBecomeSingleHunkSteps) {
  const ProcessRecord r = record_of({"1\n2\n3\n4\n5\n", "x\n2\ny\n4\nz\n"});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const ProcessRecord d = decompose(r, 1.0, rng);
    ASSERT_EQ(d.snapshots.size(), 4u);
    EXPECT_EQ(d.snapshots.front(), r.snapshots.front());
    EXPECT_EQ(d.snapshots.back(), r.snapshots.back());
    for (std::size_t i = 1; i < d.snapshots.size(); ++i) {
      EXPECT_EQ(diff(d.snapshots[i - 1], d.snapshots[i]).hunks.size(), 1u);
    }
  }
}

TEST(PickTimepoint, Weights) {
  const auto w = timepoint_weights(4, 0.9);
  ASSERT_EQ(w.size(), 3u);
  // Independent normalization of (1, 0.9, 0.81).
  const double z = 1 + 0.9 + 0.81;
  EXPECT_NEAR(w[0], 1 / z, 1e-12);
  EXPECT_NEAR(w[1], 0.9 / z, 1e-12);
  EXPECT_NEAR(w[2], 0.81 / z, 1e-12);
  EXPECT_NEAR(w[0], 0.3690, 5e-5);
  EXPECT_NEAR(w[1], 0.3321, 5e-5);
  EXPECT_NEAR(w[2], 0.2989, 5e-5);
  for (double x : timepoint_weights(6, 1.0)) EXPECT_NEAR(x, 0.2, 1e-12);
}

TEST(PickTimepoint, TwoSnapshotsAlwaysOne) {
  Rng rng(3);
  const ProcessRecord r = record_of({"a\n", "b\n"});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(pick_timepoint(r, rng), 1u);
}

TEST(PickTimepoint, Frequencies) {
  Rng rng(99);
  const ProcessRecord r = record_of({"a\n", "b\n", "c\n", "d\n"});
  std::array<int, 4> hits{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hits[pick_timepoint(r, rng)];
  EXPECT_EQ(hits[0], 0);
  EXPECT_NEAR(hits[1] / double(n), 0.3690, 0.005);
  EXPECT_NEAR(hits[2] / double(n), 0.3321, 0.005);
  EXPECT_NEAR(hits[3] / double(n), 0.2989, 0.005);
}

TEST(PickTimepoint, MinIndexSkipsFirst) {
  Rng rng(5);
  const ProcessRecord r = record_of({"a\n", "b\n", "c\n"});
  for (int i = 0; i < 50; ++i) EXPECT_EQ(pick_timepoint(r, rng, 0.9, 2), 2u);
  EXPECT_EQ(code_of([&] { pick_timepoint(record_of({"a\n", "b\n"}), rng, 0.9, 2); }), Errc::kInvalidArgument);
}

TEST(AssignType, UniformMix) {
  Rng rng(2025);
  std::array<int, 4> hits{};
  for (int i = 0; i < 10000; ++i) ++hits[static_cast<std::size_t>(assign_type(rng))];
  for (int h : hits) EXPECT_NEAR(h / 10000.0, 0.25, 0.03);
}

TEST(SegmentChanges, Examples) {
  EXPECT_EQ(segment_changes(kRenameOld, kRenameNew).size(), 1u);
  const auto two = segment_changes(twelve(false), twelve(true));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].hunks.front().old_start, 2u);
  EXPECT_EQ(two[1].hunks.front().old_start, 10u);
  EXPECT_EQ(code_of([] { segment_changes(kRenameOld, kRenameOld); }), Errc::kNoChanges);
}

TEST(SegmentChanges, AdjacentHunksMerge) {
  // A deletion followed directly by a replacement that the diff splits.
  const auto segs = segment_changes(TextDocument("a\nb\nc\n"), TextDocument("b\nX\n"));
  for (std::size_t i = 1; i < segs.size(); ++i) {
    EXPECT_LT(segs[i - 1].hunks.back().old_end(), segs[i].hunks.front().old_start);
  }
  EditScript all;
  for (const auto& s : segs) all.hunks.insert(all.hunks.end(), s.hunks.begin(), s.hunks.end());
  EXPECT_EQ(all, diff(TextDocument("a\nb\nc\n"), TextDocument("b\nX\n")));
}

TEST(JudgeSegments, KeepsTrueDecisions) {
  Script s;
  s.judge = "**Analysis of change 1:** ok\n**Decision:** `True`\n**Analysis of change 2:** no\n**Decision:** `False`";
  auto b = s.backend();
  const auto segs = judge_segments({}, twelve(false), segment_changes(twelve(false), twelve(true)), b, kPrompts,
                                   kSettings, 1);
  EXPECT_EQ(segs[0].kept, true);
  EXPECT_EQ(segs[1].kept, false);
}

TEST(JudgeSegments, CountMismatchIsParseError) {
  Script s;
  s.judge = "**Decision:** `True`";
  auto b = s.backend();
  EXPECT_EQ(code_of([&] {
              judge_segments({}, twelve(false), segment_changes(twelve(false), twelve(true)), b, kPrompts, kSettings, 1);
            }),
            Errc::kJudgeParseError);
}

TEST(GenInstruction, Examples) {
  const std::vector<TextDocument> none;
  const PromptContext ctx{none, kRenameOld, "diff", "python"};
  Script s;
  auto b = s.backend();
  EXPECT_EQ(gen_instruction(ctx, std::nullopt, b, kPrompts, kSettings, 1), "rename variables");
  s.instruction = "```\n**instruction:**\nFirst rename a.\nThen rename b.\n```";
  EXPECT_EQ(gen_instruction(ctx, std::nullopt, b, kPrompts, kSettings, 1), "First rename a.\nThen rename b.");
  s.instruction = "no marker here";
  EXPECT_EQ(code_of([&] { gen_instruction(ctx, std::nullopt, b, kPrompts, kSettings, 1); }),
            Errc::kInstructionParseError);
}

TEST(GenChat, Examples) {
  const std::vector<TextDocument> none;
  const PromptContext ctx{none, kRenameOld, "diff", "python"};
  Script s;
  auto b = s.backend();
  EXPECT_EQ(gen_chat(ctx, "rename", b, kPrompts, kSettings, 1), "I renamed the variables.");
  s.chat = "nothing";
  EXPECT_EQ(code_of([&] { gen_chat(ctx, std::nullopt, b, kPrompts, kSettings, 1); }), Errc::kChatParseError);
}

TEST(AnnotateTargetRandom, NoKeptSegmentsForcesNone) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    EXPECT_TRUE(std::holds_alternative<std::monostate>(annotate_target_random(kRenameOld, {}, rng)));
  }
}

TEST(AnnotateTargetRandom, SelectionCoversHunkSpan) {
  const TextDocument c = twelve(false);
  auto segs = segment_changes(c, twelve(true));
  segs.resize(1);
  segs[0].kept = true;
  // Line 2 spans bytes [7, 14) of "line 1\nline 2\n...".
  const std::size_t start = std::string("line 1\n").size();
  const std::size_t end = start + std::string("line 2\n").size();
  Rng rng(4);
  bool saw_selection = false, saw_cursor = false;
  for (int i = 0; i < 60; ++i) {
    const auto ann = annotate_target_random(c, segs, rng);
    if (const auto* s = std::get_if<Selection>(&ann)) {
      saw_selection = true;
      EXPECT_EQ(*s, (Selection{start, end}));
      EXPECT_EQ(c.content().substr(s->start, s->end - s->start), "line 2\n");
    } else if (const auto* cur = std::get_if<Cursor>(&ann)) {
      saw_cursor = true;
      EXPECT_EQ(cur->offset, start);
    }
  }
  EXPECT_TRUE(saw_selection && saw_cursor);
}

TEST(AssembleSample, TypeCAllKeptTargetsFinal) {
  Script s;
  auto b = s.backend();
  const ProcessRecord r = record_of({kRenameOld.content(), kRenameNew.content()});
  for (EditFormat f : kAllEditFormats) {
    Rng rng(9);
    AssembleOptions opts;
    opts.format = f;
    auto out = assemble_sample(r, 1, SampleType::kC, opts, rng, b, kPrompts, kSettings);
    ASSERT_TRUE(std::holds_alternative<TrainingSample>(out)) << std::get<Discarded>(out).reason;
    const TrainingSample& t = std::get<TrainingSample>(out);
    EXPECT_EQ(t.target.code_change, render_edit(kRenameOld, kRenameNew, f));
    EXPECT_EQ(apply_rendered(*t.target.code_change, kRenameOld), kRenameNew);
  }
}

TEST(AssembleSample, HcAtIndexTwoHasOneHistoryMessage) {
  Script s;
  auto b = s.backend();
  const ProcessRecord r = record_of({"a\n", "a\nb\n", "a\nb\nc\n"});
  Rng rng(2);
  auto out = assemble_sample(r, 2, SampleType::kHC, {}, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<TrainingSample>(out)) << std::get<Discarded>(out).reason;
  std::size_t h = 0;
  for (const Message& m : std::get<TrainingSample>(out).conversation.messages) h += m.role == Role::kHistory;
  EXPECT_EQ(h, 1u);
}

TEST(AssembleSample, CuHasNoHistoryAndOneUser) {
  Script s;
  auto b = s.backend();
  const ProcessRecord r = record_of({"a\n", "a\nb\n", "a\nb\nc\n"});
  Rng rng(2);
  auto out = assemble_sample(r, 2, SampleType::kCU, {}, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<TrainingSample>(out));
  const auto& msgs = std::get<TrainingSample>(out).conversation.messages;
  EXPECT_EQ(std::count_if(msgs.begin(), msgs.end(), [](const Message& m) { return m.role == Role::kHistory; }), 0);
  EXPECT_EQ(msgs.back().role, Role::kUser);
  EXPECT_EQ(msgs.back().body, "rename variables");
}

TEST(AssembleSample, AllRejectedWithoutUserIsDiscarded) {
  Script s;
  s.judge = "**Decision:** False\n**Decision:** False";
  auto b = s.backend();
  const ProcessRecord r = record_of({twelve(false).content(), twelve(true).content()});
  Rng rng(2);
  auto out = assemble_sample(r, 1, SampleType::kC, {}, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<Discarded>(out));
  EXPECT_EQ(std::get<Discarded>(out).code, Errc::kNoChanges);
}

TEST(AssembleSample, AllRejectedWithUserKeepsChatOnly) {
  Script s;
  s.judge = "**Decision:** False\n**Decision:** False";
  auto b = s.backend();
  const ProcessRecord r = record_of({twelve(false).content(), twelve(true).content()});
  Rng rng(2);
  AssembleOptions opts;
  opts.judge_user_types = true;
  auto out = assemble_sample(r, 1, SampleType::kCU, opts, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<TrainingSample>(out)) << std::get<Discarded>(out).reason;
  const TrainingSample& t = std::get<TrainingSample>(out);
  EXPECT_FALSE(t.target.code_change);
  EXPECT_TRUE(t.target.chat);
}

TEST(AssembleSample, UserTypesSkipJudgeByDefault) {
  Script s;
  s.judge = "**Decision:** False\n**Decision:** False";
  auto b = s.backend();
  const ProcessRecord r = record_of({twelve(false).content(), twelve(true).content()});
  Rng rng(2);
  auto out = assemble_sample(r, 1, SampleType::kCU, {}, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<TrainingSample>(out));
  EXPECT_EQ(apply_rendered(*std::get<TrainingSample>(out).target.code_change, twelve(false)), twelve(true));
}

TEST(AssembleSample, PartialKeepAppliesOnlyKeptSegment) {
  Script s;
  s.judge = "**Decision:** `False`\n**Decision:** `True`";
  auto b = s.backend();
  const ProcessRecord r = record_of({twelve(false).content(), twelve(true).content()});
  Rng rng(2);
  AssembleOptions opts;
  opts.format = EditFormat::kLocationChange;
  auto out = assemble_sample(r, 1, SampleType::kC, opts, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<TrainingSample>(out));
  const TextDocument got = apply_rendered(*std::get<TrainingSample>(out).target.code_change, twelve(false));
  std::string expected = twelve(false).content();
  expected.replace(expected.find("line 10\n"), 8, "changed 10\n");
  EXPECT_EQ(got.content(), expected);
}

TEST(AssembleSample, ReasoningPutsChatFirst) {
  Script s;
  auto b = s.backend();
  const ProcessRecord r = record_of({kRenameOld.content(), kRenameNew.content()});
  for (bool reasoning : {false, true}) {
    Rng rng(9);
    AssembleOptions opts;
    opts.with_reasoning = reasoning;
    auto out = assemble_sample(r, 1, SampleType::kC, opts, rng, b, kPrompts, kSettings);
    const std::string body = render_assistant_body(std::get<TrainingSample>(out).target);
    EXPECT_EQ(body.find("I renamed") < body.find("<|next_start|>"), reasoning);
  }
}

TEST(AssembleSample, WindowLimitsHistory) {
  Script s;
  auto b = s.backend();
  const ProcessRecord r = record_of({"a\n", "a\nb\n", "a\nb\nc\n", "a\nb\nc\nd\n", "a\nb\nc\nd\ne\n"});
  Rng rng(2);
  AssembleOptions opts;
  opts.window = 2;
  auto out = assemble_sample(r, 4, SampleType::kHC, opts, rng, b, kPrompts, kSettings);
  ASSERT_TRUE(std::holds_alternative<TrainingSample>(out));
  const auto& msgs = std::get<TrainingSample>(out).conversation.messages;
  ASSERT_EQ(std::count_if(msgs.begin(), msgs.end(), [](const Message& m) { return m.role == Role::kHistory; }), 2);
  EXPECT_EQ(msgs[1].body, "a\nb\n");
}

TEST(Jsonl, RoundTripHundredSamples) {
  MockSynthesisBackend mock;
  std::vector<InputItem> items;
  for (auto& r : testing_support::toy_records(60, 3)) items.emplace_back(std::move(r));
  DriverOptions opts;
  opts.samples_per_record = 2;
  const SynthResult res = run_pipeline(items, opts, mock);
  ASSERT_GE(res.samples.size(), 100u);
  std::vector<TrainingSample> hundred(res.samples.begin(), res.samples.begin() + 100);
  std::stringstream ss;
  emit_jsonl(hundred, ss);
  EXPECT_EQ(load_jsonl(ss), hundred);
}

TEST(Jsonl, TruncatedLineNamesLine) {
  MockSynthesisBackend mock;
  std::vector<InputItem> items;
  for (auto& r : testing_support::toy_records(5, 3)) items.emplace_back(std::move(r));
  const SynthResult res = run_pipeline(items, {}, mock);
  ASSERT_GE(res.samples.size(), 2u);
  std::string text = sample_to_line(res.samples[0]) + "\n" + sample_to_line(res.samples[1]);
  text.resize(text.size() - 10);
  std::istringstream in(text);
  try {
    load_jsonl(in, "x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSchemaError);
    EXPECT_NE(std::string(e.what()).find("x.jsonl:2:"), std::string::npos) << e.what();
  }
}

TEST(Jsonl, EmptyFileAndVersionMismatch) {
  testing_support::TempDir dir;
  EXPECT_TRUE(load_jsonl(dir.write("empty.jsonl", "")).empty());
  std::istringstream in("{\"schema_version\": 99}\n");
  EXPECT_EQ(code_of([&] { load_jsonl(in); }), Errc::kSchemaVersion);
}

TEST(Driver, InputsFromSampleFile) {
  const auto loaded = load_inputs(std::filesystem::path(PROGASSIST_SOURCE_DIR) / "samples" / "records.jsonl");
  EXPECT_EQ(loaded.items.size(), 5u);
  ASSERT_EQ(loaded.rejected.size(), 1u);
  EXPECT_EQ(loaded.rejected[0].record_id, "max-pair/u3");
}

TEST(Driver, UnparseableLineIsError) {
  std::istringstream in("{\"id\": \"a\", \"before\": \"x\", \"after\": \"y\"}\nnot json\n");
  try {
    load_inputs(in, "in.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("in.jsonl:2"), std::string::npos);
  }
}

TEST(Driver, CountsAddUpAndSamplesAreConsistent) {
  MockSynthesisBackend mock(0.6);
  std::vector<InputItem> items;
  for (auto& r : testing_support::toy_records(100, 11)) items.emplace_back(std::move(r));
  DriverOptions opts;
  opts.global_seed = 5;
  const SynthResult res = run_pipeline(items, opts, mock);
  EXPECT_EQ(res.stats.attempted, items.size());
  EXPECT_EQ(res.stats.emitted + res.stats.discarded, res.stats.attempted);
  EXPECT_GT(res.stats.emitted, 50u);
  for (const TrainingSample& s : res.samples) {
    EXPECT_NO_THROW(check_sample(s));
    EXPECT_EQ(s.provenance.seed, derive_seed(5, s.provenance.record_id,
                                             {std::stoull(s.provenance.record_id.substr(4)), s.provenance.sample_index}));
  }
  for (const DiscardEntry& d : res.discards) EXPECT_FALSE(d.reason.empty());
}

TEST(Driver, DeterministicAcrossWorkerCounts) {
  MockSynthesisBackend mock;
  std::vector<InputItem> items;
  for (auto& r : testing_support::toy_records(40, 8)) items.emplace_back(std::move(r));
  items.emplace_back(SeedCode{"seed-1", "def g(x):\n    y = x\n    return y * 2\n", "python", std::nullopt});
  DriverOptions one;
  one.global_seed = 17;
  one.samples_per_record = 3;
  DriverOptions many = one;
  many.workers = 4;
  const SynthResult a = run_pipeline(items, one, mock);
  const SynthResult b = run_pipeline(items, many, mock);
  EXPECT_EQ(a.samples, b.samples);
  DriverOptions other = one;
  other.global_seed = 18;
  EXPECT_NE(run_pipeline(items, other, mock).samples, a.samples);
}

TEST(Driver, SeedCodeGetsGeneratedHistory) {
  MockSynthesisBackend mock(1.0);
  std::vector<InputItem> items{
      SeedCode{"seed", "def g(x):\n    a = 1\n    b = 2\n    c = 3\n    return a + b + c + x\n", "python", Persona::kExpert}};
  DriverOptions opts;
  opts.samples_per_record = 4;
  const SynthResult res = run_pipeline(items, opts, mock);
  ASSERT_FALSE(res.samples.empty());
  for (const TrainingSample& s : res.samples) EXPECT_EQ(s.provenance.source, Source::kAiProgrammer);
}

TEST(Measure, CountersOnRenders) {
  EXPECT_EQ(count_whitespace_tokens("a b c"), 3u);
  EXPECT_EQ(count_bytes(""), 0u);
  TrainingSample s;
  s.conversation.messages.push_back(Message::current("x = 1\n"));
  s.target = Message::assistant(RenderedEdit{EditFormat::kWholeFile, "x = 2\n"}, std::nullopt);
  s.provenance.record_id = "r";
  const auto item = measure(s, count_bytes);
  EXPECT_EQ(item.id, "r#0");
  EXPECT_EQ(item.length, s.render().size());
  TrainingSample longer = s;
  longer.conversation.messages.insert(longer.conversation.messages.begin(), Message::history("x = 0\n"));
  EXPECT_GE(measure(longer, count_whitespace_tokens).length, measure(s, count_whitespace_tokens).length);
}

TEST(Prompts, FillTemplateLeavesOtherBraces) {
  EXPECT_EQ(fill_template("{a} {b} {{x}} {a}", {{"a", "{b}"}}), "{b} {b} {{x}} {b}");
}

TEST(Prompts, ResourceFilesMatchDefaults) {
  const auto dir = std::filesystem::path(PROGASSIST_SOURCE_DIR) / "resources" / "prompts";
  const PromptTemplates defaults;
  for (const auto& [name, text] : defaults.texts) {
    EXPECT_EQ(testing_support::read_file(dir / (name + ".txt")), text) << name;
  }
  const PromptTemplates loaded = PromptTemplates::load(dir);
  EXPECT_EQ(loaded.texts, defaults.texts);
}

TEST(Prompts, DirectoryOverrides) {
  testing_support::TempDir dir;
  dir.write("chat_system.txt", "custom **chat:**");
  const PromptTemplates t = PromptTemplates::load(dir.path);
  EXPECT_EQ(t.get("chat_system"), "custom **chat:**");
  EXPECT_EQ(t.get("judge_system"), PromptTemplates{}.get("judge_system"));
  EXPECT_EQ(code_of([] { PromptTemplates::load("/nonexistent/dir"); }), Errc::kIo);
}
