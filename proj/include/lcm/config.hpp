#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcm/criteria.hpp"

namespace lcm {

namespace fs = std::filesystem;

struct DatedMap {
  fs::path path;
  double date = 0.0;
};

struct MapsConfig {
  fs::path legend;
  std::optional<DatedMap> t_prev2;  // only needed for order-2 chains
  DatedMap t_prev;
  DatedMap t_curr;
  DatedMap t_next;  // held out for validation
  std::optional<fs::path> mask;
};

struct CriterionConfig {
  std::string name;
  fs::path path;
  bool distance = false;  // path is a target mask; the criterion is distance to it
};

struct FactorConfig {
  std::string criterion;
  std::optional<FuzzySpec> fuzzy;
  std::vector<ReclassRule> reclass;
};

struct ConstraintConfig {
  std::string criterion;
  std::string predicate;  // e.g. "<=3000", "in:1,2"
};

struct SuitabilityConfig {
  int class_id = 0;
  std::vector<FactorConfig> factors;
  std::optional<fs::path> saaty;      // required with more than one factor
  std::vector<double> order_weights;  // empty: weighted linear combination
  std::vector<ConstraintConfig> constraints;
};

struct MarkovConfig {
  int order = 1;
};

struct CaConfig {
  int kernel = 5;
  int iterations = 0;  // 0: whole years of the projection span
};

struct MlpConfig {
  int hidden = 8;
  double learning_rate = 0.5;
  int epochs = 1000;
  std::optional<int> focal_class;  // default: highest legend id
  double threshold = 0.5;
};

struct PreprocessConfig {
  std::vector<std::pair<std::string, fs::path>> bands;
  std::optional<fs::path> dark_mask;
  double percentile = 0.0;
};

struct IndicesConfig {
  fs::path red, nir, mir;
  double ndvi_weight = 0.5;
};

struct ChangeConfig {
  std::vector<fs::path> ndim;  // three dates
  double low_fraction = 1.0 / 3.0;
  double high_fraction = 2.0 / 3.0;
  std::optional<fs::path> grouping;
};

struct ClassifyConfig {
  std::vector<std::pair<std::string, fs::path>> bands;
  fs::path training;
  fs::path legend;
  double beta = 1.5;
  int sweeps = 10;
  std::string priors = "empirical";
  std::optional<fs::path> reference;
};

struct SynthConfig {
  int rows = 128;
  int cols = 128;
  int patches = 60;
  std::vector<double> dates{1988, 1992, 2000};
};

struct PipelineConfig {
  fs::path source;
  fs::path output_dir;
  std::uint64_t seed = 1;
  std::string model = "ca_markov";  // ca_markov, mlp or both

  std::optional<MapsConfig> maps;
  std::vector<CriterionConfig> criteria;
  std::vector<SuitabilityConfig> suitability;  // ascending class id
  MarkovConfig markov;
  CaConfig ca;
  MlpConfig mlp;
  std::optional<PreprocessConfig> preprocess;
  std::optional<IndicesConfig> indices;
  std::optional<ChangeConfig> change;
  std::optional<ClassifyConfig> classify;
  SynthConfig synth;

  bool runs_ca() const { return model == "ca_markov" || model == "both"; }
  bool runs_mlp() const { return model == "mlp" || model == "both"; }
  const MapsConfig& require_maps() const;
};

// Parses an INI file; relative paths resolve against the file's directory. Checks that every
// referenced file exists, dates increase strictly and parameters are in range. Unknown sections
// and keys are rejected.
PipelineConfig load_config(const fs::path& path);
PipelineConfig parse_config(const std::string& text, const fs::path& base_dir);

// Normalised INI text with every default filled in.
std::string echo_config(const PipelineConfig& config);

}  // namespace lcm
