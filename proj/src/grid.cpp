#include "lcm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lcm/error.hpp"

namespace lcm {

void validate_geometry(const GridGeometry& geometry) {
  if (geometry.rows <= 0 || geometry.cols <= 0) {
    throw DataError("grid dimensions must be positive (rows=" + std::to_string(geometry.rows) +
                    ", cols=" + std::to_string(geometry.cols) + ")");
  }
  if (!(geometry.cell_size > 0.0) || !std::isfinite(geometry.cell_size)) {
    throw DataError("cell size must be a positive finite number");
  }
  if (!std::isfinite(geometry.nodata)) {
    throw DataError("nodata sentinel must be finite");
  }
}

Grid::Grid(GridGeometry geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
  validate_geometry(geometry_);
  if (values_.size() != geometry_.size()) {
    throw DataError("grid holds " + std::to_string(values_.size()) + " values, expected " +
                    std::to_string(geometry_.size()));
  }
}

Grid Grid::filled(const GridGeometry& geometry, double value) {
  return Grid(geometry, std::vector<double>(geometry.size(), value));
}

std::size_t Grid::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(),
                                                [&](double v) { return v != geometry_.nodata; }));
}

BinaryMask::BinaryMask(GridGeometry geometry, std::vector<std::uint8_t> values)
    : geometry_(geometry), values_(std::move(values)) {
  validate_geometry(geometry_);
  if (values_.size() != geometry_.size()) {
    throw DataError("mask holds " + std::to_string(values_.size()) + " values, expected " +
                    std::to_string(geometry_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] > 1) {
      throw DataError("mask value at cell " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

BinaryMask BinaryMask::filled(const GridGeometry& geometry, bool value) {
  return BinaryMask(geometry, std::vector<std::uint8_t>(geometry.size(), value ? 1 : 0));
}

BinaryMask BinaryMask::from_grid(const Grid& grid) {
  std::vector<std::uint8_t> out(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.is_valid(i)) continue;
    const double v = grid[i];
    if (v == 1.0) {
      out[i] = 1;
    } else if (v != 0.0) {
      throw DataError("mask cell (" + std::to_string(i / grid.cols()) + "," +
                      std::to_string(i % grid.cols()) + ") holds " + std::to_string(v) +
                      "; masks take only 0 or 1");
    }
  }
  return BinaryMask(grid.geometry(), std::move(out));
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

Grid BinaryMask::to_grid() const {
  std::vector<double> v(values_.begin(), values_.end());
  return Grid(geometry_, std::move(v));
}

std::size_t MultiBandImage::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DataError("image has no band labelled '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

LandCoverMap::LandCoverMap(Grid grid, Legend legend, std::string date_tag)
    : grid_(std::move(grid)), legend_(std::move(legend)), date_tag_(std::move(date_tag)) {
  for (const auto& [id, name] : legend_) {
    if (id < 0) throw DataError("legend class id " + std::to_string(id) + " is negative");
  }
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!grid_.is_valid(i)) continue;
    const double v = grid_[i];
    if (v != std::floor(v) || legend_.count(static_cast<int>(v)) == 0) {
      throw DataError("land-cover cell (" + std::to_string(i / grid_.cols()) + "," +
                      std::to_string(i % grid_.cols()) + ") value " + std::to_string(v) +
                      " is not a legend class");
    }
  }
}

std::vector<int> LandCoverMap::class_ids() const {
  std::vector<int> ids;
  ids.reserve(legend_.size());
  for (const auto& entry : legend_) ids.push_back(entry.first);
  return ids;
}

std::map<int, std::int64_t> LandCoverMap::class_counts() const {
  std::map<int, std::int64_t> counts;
  for (const auto& entry : legend_) counts[entry.first] = 0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (grid_.is_valid(i)) ++counts[class_at(i)];
  }
  return counts;
}

void require_same_frame(const GridGeometry& a, const GridGeometry& b, const std::string& what) {
  if (!a.same_frame(b)) {
    throw DataError("geometry mismatch: " + what + " (" + std::to_string(a.rows) + "x" +
                    std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                    std::to_string(b.cols) + ", or differing cell size/origin)");
  }
}

Grid apply_mask(const Grid& grid, const BinaryMask& mask) {
  require_same_frame(grid.geometry(), mask.geometry(), "mask vs grid");
  std::vector<double> out(grid.values().begin(), grid.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask[i]) out[i] = grid.nodata();
  }
  return Grid(grid.geometry(), std::move(out));
}

MultiBandImage stack_bands(std::vector<Grid> grids, std::vector<std::string> labels) {
  if (grids.size() != labels.size()) {
    throw DataError("stack_bands: " + std::to_string(grids.size()) + " grids but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (grids.empty()) throw DataError("stack_bands: no bands given");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (!seen.insert(labels[i]).second) {
      throw DataError("stack_bands: duplicate band label '" + labels[i] + "'");
    }
    if (!(grids[i].geometry() == grids.front().geometry())) {
      throw DataError("stack_bands: band " + std::to_string(i) + " ('" + labels[i] +
                      "') geometry differs from band 0");
    }
  }
  MultiBandImage image;
  image.bands_ = std::move(grids);
  image.labels_ = std::move(labels);
  return image;
}

}  // namespace lcm
