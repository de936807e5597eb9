#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcm/grid.hpp"

namespace lcm {

struct ClassSignature {
  int class_id = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // regularized, symmetric positive-definite
  double prior = 0.0;
  std::int64_t sample_count = 0;
};

struct SignatureSet {
  std::vector<ClassSignature> classes;  // ascending class id
  Legend legend;
};

// Relative diagonal load added to training covariances: delta = 1e-6 * trace / dim
// (1e-6 when the trace is zero).
inline constexpr double kCovarianceRegularization = 1e-6;

SignatureSet estimate_signatures(const MultiBandImage& image, const LandCoverMap& training);

enum class PriorMode { equal, empirical };

// Per-class discriminant grids aligned with `class_ids`.
struct ClassScores {
  std::vector<int> class_ids;
  std::vector<Grid> grids;
};

struct MaxLikeResult {
  LandCoverMap map;
  ClassScores scores;
};

// score_c = ln p_c - 0.5 ln det S_c - 0.5 (x - m_c)' S_c^-1 (x - m_c); argmax with ties to the
// lowest class id. Pixels with nodata in any band stay unlabelled.
MaxLikeResult maxlike(const MultiBandImage& image, const SignatureSet& signatures,
                      PriorMode priors = PriorMode::empirical);

struct IcmOptions {
  double beta = 1.5;
  int max_sweeps = 10;
};

struct IcmResult {
  LandCoverMap map;
  int sweeps = 0;
  // Objective before the first sweep followed by the value after each sweep.
  std::vector<long double> objective;
};

// Iterated conditional modes over the 8-neighbourhood with raster-order updates. Each pixel
// moves to the label maximising score_c + beta * (neighbours labelled c), keeping its current
// label unless another label is strictly better.
IcmResult icm(const LandCoverMap& initial, const ClassScores& scores, IcmOptions options = {});

// Sum of each labelled pixel's score plus beta per unordered same-label neighbour pair.
long double icm_objective(const LandCoverMap& map, const ClassScores& scores, double beta);

struct ConfusionMatrix {
  std::vector<int> class_ids;
  std::vector<std::int64_t> counts;  // row = reference, column = predicted

  std::size_t order() const noexcept { return class_ids.size(); }
  std::int64_t at(std::size_t ref, std::size_t pred) const { return counts[ref * order() + pred]; }
  std::int64_t total() const noexcept;
};

ConfusionMatrix confusion(const LandCoverMap& predicted, const LandCoverMap& reference,
                          const BinaryMask* mask = nullptr);
double overall_accuracy(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);

struct Residuals {
  BinaryMask disagreement;
  std::map<int, double> producer_accuracy;  // reference classes with at least one pixel
};

Residuals residual_map(const LandCoverMap& predicted, const LandCoverMap& reference);

std::string format_confusion_csv(const ConfusionMatrix& cm);
std::string format_signatures_csv(const SignatureSet& signatures);
SignatureSet read_signatures_csv(const std::filesystem::path& path, const Legend& legend);

}  // namespace lcm
