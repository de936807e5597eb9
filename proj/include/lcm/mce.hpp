#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lcm/grid.hpp"

namespace lcm {

// Reciprocal pairwise-comparison matrix on Saaty's 1/9..9 scale.
class SaatyMatrix {
 public:
  explicit SaatyMatrix(Eigen::MatrixXd m);

  // n rows of n comma-separated entries; fractions such as "1/3" are accepted.
  static SaatyMatrix read_csv(const std::filesystem::path& path);
  // Builds the perfectly consistent matrix a_ij = w_i / w_j.
  static SaatyMatrix from_weights(const std::vector<double>& weights);

  Eigen::Index order() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

 private:
  Eigen::MatrixXd m_;
};

struct WeightSet {
  std::vector<double> weights;  // sum to 1
  double lambda_max = 0.0;
  double consistency_index = 0.0;
  double consistency_ratio = 0.0;
  int iterations = 0;

  // Ratios above 0.10 are reported as a warning, never rejected.
  bool consistent_enough() const noexcept { return consistency_ratio <= 0.10; }
};

inline constexpr double kPowerIterationTolerance = 1e-12;
inline constexpr int kPowerIterationLimit = 10000;

// Random consistency index for orders 1..10.
double random_index(Eigen::Index n);

// Principal eigenvector by power iteration from the uniform vector.
WeightSet saaty_weights(const SaatyMatrix& m);

// Weighted linear combination: round(sum w_i f_i) times the product of the constraints;
// nodata where any factor is nodata.
Grid wlc(std::span<const Grid> factors, std::span<const double> weights,
         std::span<const BinaryMask> constraints = {});

// Ordered weighted averaging over the factor-weighted values n * w_i * f_i: order weight k goes
// to the k-th smallest value. Clamped to [0, 255], rounded, constraints applied as in wlc.
// Uniform order weights reproduce wlc.
Grid owa(std::span<const Grid> factors, std::span<const double> factor_weights,
         std::span<const double> order_weights, std::span<const BinaryMask> constraints = {});

}  // namespace lcm
