#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lcm/grid.hpp"

namespace testutil {

inline lcm::GridGeometry geometry(int rows, int cols, double cell = 1.0) {
  lcm::GridGeometry g;
  g.rows = rows;
  g.cols = cols;
  g.cell_size = cell;
  return g;
}

inline lcm::Grid grid(int rows, int cols, std::vector<double> v) {
  return lcm::Grid(geometry(rows, cols), std::move(v));
}

inline lcm::Grid random_grid(std::mt19937_64& rng, int rows, int cols, double lo, double hi,
                             double nodata_share = 0.0) {
  std::uniform_real_distribution<double> u(lo, hi), p(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = p(rng) < nodata_share ? lcm::kDefaultNodata : u(rng);
  return lcm::Grid(geometry(rows, cols), std::move(v));
}

inline lcm::Legend legend(int n) {
  lcm::Legend l;
  for (int k = 1; k <= n; ++k) l[k] = "class" + std::to_string(k);
  return l;
}

inline lcm::LandCoverMap map(int rows, int cols, std::vector<double> v, int classes) {
  return lcm::LandCoverMap(grid(rows, cols, std::move(v)), legend(classes));
}

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("lcm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
