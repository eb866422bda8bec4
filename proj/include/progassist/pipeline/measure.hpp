#pragma once

#include <string>

#include "progassist/packing.hpp"
#include "progassist/pipeline/sample.hpp"

namespace progassist::pipeline {

/// Packing size of a sample: the counter applied to its full rendering.
inline SizedItem<std::string> measure(const TrainingSample& sample, const LengthCounter& counter,
                                      std::string id = {}) {
  if (id.empty()) {
    id = sample.provenance.record_id + "#" + std::to_string(sample.provenance.sample_index);
  }
  return {std::move(id), counter(sample.render())};
}

}  // namespace progassist::pipeline
