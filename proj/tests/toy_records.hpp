#pragma once

#include <string>
#include <vector>

#include "progassist/pipeline/record.hpp"
#include "progassist/rng.hpp"

namespace testing_support {

/// Small python-like coding processes with several multi-hunk steps.
inline std::vector<progassist::pipeline::ProcessRecord> toy_records(std::size_t count, std::uint64_t seed) {
  using namespace progassist;
  Rng rng(seed);
  std::vector<pipeline::ProcessRecord> out;
  for (std::size_t r = 0; r < count; ++r) {
    std::vector<std::string> lines;
    const std::size_t n = 4 + rng.uniform_index(8);
    lines.push_back("def f" + std::to_string(r) + "(x):");
    for (std::size_t i = 1; i < n; ++i) lines.push_back("    v" + std::to_string(i) + " = x + " + std::to_string(i));
    lines.push_back("    return x");
    pipeline::ProcessRecord rec;
    rec.id = "toy-" + std::to_string(r);
    rec.source = r % 2 ? pipeline::Source::kGitCommit : pipeline::Source::kOnlineSubmit;
    rec.language = "python";
    rec.metadata = "toy record " + std::to_string(r);
    auto join = [&] {
      std::string s;
      for (const std::string& l : lines) s += l + "\n";
      return progassist::TextDocument(s);
    };
    rec.snapshots.push_back(join());
    const std::size_t steps = 1 + rng.uniform_index(4);
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t edits = 1 + rng.uniform_index(3);
      for (std::size_t e = 0; e < edits; ++e) {
        const std::size_t at = 1 + rng.uniform_index(lines.size() - 1);
        const std::string fresh = "    w" + std::to_string(s) + "_" + std::to_string(e) + " = x * " +
                                  std::to_string(rng.uniform_index(100));
        if (rng.bernoulli(0.5)) lines[at] = fresh;
        else lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), fresh);
      }
      rec.snapshots.push_back(join());
    }
    rec.snapshots = pipeline::collapse_repeats(std::move(rec.snapshots));
    if (rec.snapshots.size() >= 2) out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace testing_support
