#pragma once

#include <array>
#include <string>
#include <vector>

#include "lcm/ascii_grid.hpp"
#include "lcm/grid.hpp"

namespace lcm {

enum class TernaryLevel : int { low = 0, medium = 1, high = 2 };

// (a - b) / (a + b). NDVI is (nir, red); NDII is (nir, mir).
Grid normalized_difference(const Grid& a, const Grid& b);

// Weighted mean w * ndvi + (1 - w) * ndii; w = 0.5 is the plain mean.
Grid ndim(const Grid& ndvi, const Grid& ndii, double ndvi_weight = 0.5);

struct TernaryThresholds {
  double low = 0.0;
  double high = 0.0;
};

// v < low -> 0, low <= v < high -> 1, v >= high -> 2.
Grid ternarize(const Grid& grid, TernaryThresholds thresholds);

// Nearest-rank quantiles of the valid values at the given fractions (defaults 1/3, 2/3).
// If both quantiles coincide, the upper threshold is nudged to the next representable value.
TernaryThresholds quantile_thresholds(const Grid& grid, double low_fraction = 1.0 / 3.0,
                                      double high_fraction = 2.0 / 3.0);

struct ChangeComposite {
  Grid codes;  // 9*l1 + 3*l2 + l3, nodata where any date is nodata
  RgbImage image;
};

// Three dates of ternary levels -> base-3 change codes and an R,G,B rendering
// (low 0, medium 128, high 255).
ChangeComposite change_composite(const Grid& levels_t1, const Grid& levels_t2,
                                 const Grid& levels_t3);

std::array<TernaryLevel, 3> decode_change(int code);

// Total map from the 27 change codes to contiguous category ids.
class DynamicsGrouping {
 public:
  DynamicsGrouping(std::array<int, 27> category_of_code, std::vector<std::string> names);

  // Ten trajectory categories: stable high, stable medium, stable cleared/stressed,
  // steady loss, loss after t1, loss after t2, regrowth after t1, regrowth after t2,
  // loss then regrowth, regrowth then loss.
  static DynamicsGrouping standard();
  // CSV "code,category_id,category_name" with one row per code 0..26.
  static DynamicsGrouping read_csv(const std::filesystem::path& path);
  std::string to_csv() const;

  int category(int code) const;
  const std::vector<std::string>& names() const noexcept { return names_; }
  Legend legend() const;

 private:
  std::array<int, 27> category_of_code_;
  std::vector<std::string> names_;
};

LandCoverMap group_dynamics(const Grid& codes, const DynamicsGrouping& grouping);

}  // namespace lcm
