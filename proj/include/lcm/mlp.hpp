#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lcm/grid.hpp"

namespace lcm {

// Logistic function, evaluated on the branch that cannot overflow.
double sigmoid(double z) noexcept;

// One hidden layer of q sigmoid units:
//   raw(x) = sum_i w2_i g(x . w1_i + w0_i) + bias
// Probability mode returns g(raw(x)).
struct MlpModel {
  int n_inputs = 0;
  int q = 0;
  std::vector<double> input_weights;   // q x n_inputs, row-major
  std::vector<double> hidden_biases;   // q
  std::vector<double> output_weights;  // q
  double output_bias = 0.0;
  bool probability = true;

  bool operator==(const MlpModel&) const = default;
};

// Zero-filled model with consistent dimensions.
MlpModel make_model(int n_inputs, int q, bool probability = true);

// Uniform weights in +-1/sqrt(fan_in) per layer (fan_in is n_inputs for the hidden layer and
// q for the output layer) drawn from a 64-bit Mersenne twister seeded with `seed`.
MlpModel init_model(int n_inputs, int q, std::uint64_t seed, bool probability = true);

double forward(const MlpModel& model, std::span<const double> x);
double forward_raw(const MlpModel& model, std::span<const double> x);

// Gradient of 0.5 * (forward(x) - target)^2, laid out like the model.
struct MlpGradient {
  std::vector<double> input_weights;
  std::vector<double> hidden_biases;
  std::vector<double> output_weights;
  double output_bias = 0.0;
};

MlpGradient gradient(const MlpModel& model, std::span<const double> x, double target);

struct Dataset {
  int n_inputs = 0;
  std::vector<double> inputs;  // N x n_inputs, row-major
  std::vector<double> targets;
  std::vector<std::size_t> pixels;  // source cell of each row, empty for hand-built sets

  std::size_t size() const noexcept { return targets.size(); }
  std::span<const double> row(std::size_t i) const {
    return {inputs.data() + i * static_cast<std::size_t>(n_inputs),
            static_cast<std::size_t>(n_inputs)};
  }
};

// Mean of (forward(x) - t)^2 over the dataset.
double mean_squared_error(const MlpModel& model, const Dataset& data);

struct TrainResult {
  MlpModel model;
  std::vector<double> loss;  // MSE before each epoch's update
};

// Full-batch gradient descent on the mean of 0.5 (o - t)^2. Samples are visited in order so
// the result is reproducible.
TrainResult train(MlpModel model, const Dataset& data, double learning_rate, int epochs);

// Feature construction shared by training and prediction: one-hot prior class followed by
// criteria scaled with the bounds recorded at training time.
struct FeatureSpec {
  std::vector<int> class_ids;
  std::vector<double> criterion_min;
  std::vector<double> criterion_max;
  int focal_class = 0;
  // Label given below threshold to pixels whose prior class is the focal class.
  int release_class = 0;

  int n_inputs() const noexcept {
    return static_cast<int>(class_ids.size() + criterion_min.size());
  }
  bool operator==(const FeatureSpec&) const = default;
};

struct SampleSet {
  Dataset data;
  FeatureSpec features;
  std::vector<std::string> warnings;
};

// One sample per pixel valid in every layer; target 1 when `next` holds the focal class.
// Constant criteria encode as 0.5 and raise a warning.
SampleSet build_samples(const LandCoverMap& prior, const LandCoverMap& next,
                        const std::vector<Grid>& criteria, int focal_class);

Dataset encode_features(const FeatureSpec& features, const LandCoverMap& prior,
                        const std::vector<Grid>& criteria);

struct MlpPrediction {
  Grid probability;
  LandCoverMap map;
};

// Probability >= threshold -> focal class; otherwise the prior class, or the release class
// when the prior is focal.
MlpPrediction predict_map(const MlpModel& model, const FeatureSpec& features,
                          const LandCoverMap& prior, const std::vector<Grid>& criteria,
                          double threshold = 0.5);

std::string format_model(const MlpModel& model, const FeatureSpec& features);
std::pair<MlpModel, FeatureSpec> parse_model(const std::string& text);
std::pair<MlpModel, FeatureSpec> read_model(const std::filesystem::path& path);
std::string format_loss_csv(const std::vector<double>& loss);

}  // namespace lcm
