#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lcm/config.hpp"
#include "lcm/synth.hpp"

namespace lcm {

// Every stage reads its inputs from the configured files or from earlier stages' outputs under
// the output directory, and writes its own outputs there. The monolithic run is the chained
// sequence criteria, mce, markov, predict, mlp-train, mlp-predict, validate (model stages as
// selected by [run] model).
struct StageResult {
  std::string stage;
  std::string section;  // human-readable report text
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

const std::vector<std::string>& stage_names();
std::vector<std::string> run_stage_sequence(const PipelineConfig& config);

// Runs one stage; errors are rethrown with the stage name prefixed, keeping their kind.
StageResult run_stage(const std::string& stage, const PipelineConfig& config);

struct RunReport {
  std::vector<StageResult> stages;
  std::string text;
  std::map<std::string, double> metrics;  // from report/summary.csv
};

RunReport run_calibrate_predict_validate(const PipelineConfig& config);

// Reads report/summary.csv under the output directory.
std::map<std::string, double> read_summary(const std::filesystem::path& output_dir);

// Generates the default synthetic scenario (maps, criteria, Saaty matrix, scenario.ini) in `dir`.
SynthLandscape write_synthetic_scenario(const SynthSpec& spec, const std::filesystem::path& dir);
SynthSpec synth_spec_from_config(const PipelineConfig& config);

}  // namespace lcm
