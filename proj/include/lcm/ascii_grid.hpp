#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "lcm/grid.hpp"

namespace lcm {

// ESRI-style ASCII grid: NCOLS, NROWS, XLLCORNER, YLLCORNER, CELLSIZE, NODATA_VALUE
// (keys case-insensitive, any order) followed by NROWS lines of NCOLS numbers,
// northernmost row first.
Grid parse_ascii_grid(std::istream& in, const std::string& source_name);
Grid read_ascii_grid(const std::filesystem::path& path);
std::string format_ascii_grid(const Grid& grid);
void write_ascii_grid(const Grid& grid, const std::filesystem::path& path);

BinaryMask read_mask(const std::filesystem::path& path);
LandCoverMap read_land_cover(const std::filesystem::path& path, const Legend& legend,
                             std::string date_tag = {});

// Legend CSV with header "id,name".
Legend read_legend(const std::filesystem::path& path);
void write_legend(const Legend& legend, const std::filesystem::path& path);

struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // rows*cols*3, row-major RGB
};

struct StretchRange {
  double min = 0.0;
  double max = 1.0;
};

// Binary P6 with maxval 255.
std::string encode_ppm(const RgbImage& image);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);

// Linear stretch per channel: round(255 * clamp((v - min) / (max - min), 0, 1)).
// A cell that is nodata in any channel renders black.
RgbImage stretch_composite(const Grid& r, const Grid& g, const Grid& b,
                           const std::array<StretchRange, 3>& stretch);
void export_ppm(const Grid& r, const Grid& g, const Grid& b,
                const std::array<StretchRange, 3>& stretch, const std::filesystem::path& path);

// Categorical rendering with a fixed palette indexed by position in the legend.
RgbImage render_land_cover(const LandCoverMap& map);

}  // namespace lcm
