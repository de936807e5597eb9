#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lcm {

inline constexpr double kDefaultNodata = -9999.0;

struct GridGeometry {
  int rows = 0;
  int cols = 0;
  double cell_size = 1.0;
  double x_origin = 0.0;  // lower-left corner
  double y_origin = 0.0;
  double nodata = kDefaultNodata;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  // Rows, columns, cell size and origin agree. Nodata may differ.
  bool same_frame(const GridGeometry& other) const noexcept {
    return rows == other.rows && cols == other.cols && cell_size == other.cell_size &&
           x_origin == other.x_origin && y_origin == other.y_origin;
  }
  bool operator==(const GridGeometry&) const = default;
};

// Throws DataError if the geometry is not usable (non-positive size, bad cell size,
// non-finite nodata).
void validate_geometry(const GridGeometry& geometry);

// Single-band raster stored row-major, row 0 northernmost. Immutable once built.
class Grid {
 public:
  Grid() = default;
  Grid(GridGeometry geometry, std::vector<double> values);

  static Grid filled(const GridGeometry& geometry, double value);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  int rows() const noexcept { return geometry_.rows; }
  int cols() const noexcept { return geometry_.cols; }
  std::size_t size() const noexcept { return values_.size(); }
  double nodata() const noexcept { return geometry_.nodata; }

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double at(int row, int col) const noexcept {
    return values_[static_cast<std::size_t>(row) * geometry_.cols + col];
  }
  bool is_valid(std::size_t i) const noexcept { return values_[i] != geometry_.nodata; }
  std::size_t valid_count() const noexcept;

  bool operator==(const Grid&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(GridGeometry geometry, std::vector<std::uint8_t> values);

  static BinaryMask filled(const GridGeometry& geometry, bool value);
  // Cells must be 0 or 1; nodata cells become 0.
  static BinaryMask from_grid(const Grid& grid);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  bool operator[](std::size_t i) const noexcept { return values_[i] != 0; }
  std::size_t count() const noexcept;
  Grid to_grid() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> values_;
};

// Co-registered bands tagged with unique role labels ("red", "nir", "mir1", ...).
class MultiBandImage {
 public:
  MultiBandImage() = default;

  std::size_t band_count() const noexcept { return bands_.size(); }
  const Grid& band(std::size_t i) const { return bands_.at(i); }
  const std::vector<Grid>& bands() const noexcept { return bands_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const GridGeometry& geometry() const { return bands_.front().geometry(); }
  // Throws DataError when no band carries the label.
  std::size_t index_of(const std::string& label) const;

 private:
  friend MultiBandImage stack_bands(std::vector<Grid> grids, std::vector<std::string> labels);
  std::vector<Grid> bands_;
  std::vector<std::string> labels_;
};

using Legend = std::map<int, std::string>;

// Categorical map: every valid cell holds an integer class id present in the legend.
class LandCoverMap {
 public:
  LandCoverMap() = default;
  LandCoverMap(Grid grid, Legend legend, std::string date_tag = {});

  const Grid& grid() const noexcept { return grid_; }
  const Legend& legend() const noexcept { return legend_; }
  const std::string& date_tag() const noexcept { return date_tag_; }
  const GridGeometry& geometry() const noexcept { return grid_.geometry(); }
  std::size_t size() const noexcept { return grid_.size(); }

  bool is_valid(std::size_t i) const noexcept { return grid_.is_valid(i); }
  int class_at(std::size_t i) const noexcept { return static_cast<int>(grid_[i]); }
  std::vector<int> class_ids() const;
  // Pixel count per legend class (zero for absent classes).
  std::map<int, std::int64_t> class_counts() const;

  bool operator==(const LandCoverMap&) const = default;

 private:
  Grid grid_;
  Legend legend_;
  std::string date_tag_;
};

// Throws DataError naming `what` when frames differ.
void require_same_frame(const GridGeometry& a, const GridGeometry& b, const std::string& what);

Grid apply_mask(const Grid& grid, const BinaryMask& mask);

MultiBandImage stack_bands(std::vector<Grid> grids, std::vector<std::string> labels);

}  // namespace lcm
