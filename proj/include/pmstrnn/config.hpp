// config.hpp
// json run configuration with strict key checking. Every field has a default;
// unknown keys anywhere in the file are an error so typos cannot silently
// fall back to defaults.

#pragma once

#include <string>
#include <vector>

#include "pmstrnn/arch.hpp"
#include "pmstrnn/dataset.hpp"
#include "pmstrnn/regression.hpp"
#include "pmstrnn/training.hpp"

namespace pmstrnn {

struct SequencePlan {
  std::string label;
  int subject = 0;
  std::vector<PlanEntry> plan;
};

struct DatasetConfig {
  int steps_per_cycle = kStepsPerCycleDefault;
  std::vector<SequencePlan> sequences;
};

struct RunConfig {
  ArchitectureSpec arch;  // default_architecture() when the section is absent
  TrainingConfig training;
  RegressionConfig regression;
  DatasetConfig dataset;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// the full default configuration, serialized; doubles as documentation
std::string default_config_json();

}  // namespace pmstrnn
