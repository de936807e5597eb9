#include "lcm/ascii_grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

namespace {

constexpr std::array<const char*, 6> kHeaderKeys = {"NCOLS",    "NROWS",    "XLLCORNER",
                                                    "YLLCORNER", "CELLSIZE", "NODATA_VALUE"};

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string where(const std::string& source, int line) {
  return source + ":" + std::to_string(line);
}

}  // namespace

Grid parse_ascii_grid(std::istream& in, const std::string& source_name) {
  std::array<std::optional<double>, 6> header{};
  std::string line;
  std::optional<std::string> pending;  // first data line, read while scanning the header
  int line_no = 0;
  int header_lines = 0;
  while (header_lines < 6 && std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;
    const std::string k = upper(key);
    const auto it = std::find_if(kHeaderKeys.begin(), kHeaderKeys.end(),
                                 [&](const char* name) { return k == name; });
    if (it == kHeaderKeys.end()) {
      if (!key.empty() && (std::isalpha(static_cast<unsigned char>(key[0])) != 0) &&
          upper(key) != "NAN" && upper(key) != "INF") {
        throw DataError(where(source_name, line_no) + ": unknown header key '" + key + "'");
      }
      pending = line;
      break;
    }
    if (!(ls >> value) || (ls >> extra)) {
      throw DataError(where(source_name, line_no) + ": malformed header line '" + trim(line) + "'");
    }
    const auto slot = static_cast<std::size_t>(it - kHeaderKeys.begin());
    if (header[slot]) {
      throw DataError(where(source_name, line_no) + ": duplicate header key " + kHeaderKeys[slot]);
    }
    header[slot] = parse_number(value, where(source_name, line_no) + " " + kHeaderKeys[slot]);
    ++header_lines;
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!header[i]) {
      throw DataError(where(source_name, line_no) + ": missing header key " + kHeaderKeys[i]);
    }
  }
  const double ncols = *header[0];
  const double nrows = *header[1];
  if (ncols != std::floor(ncols) || nrows != std::floor(nrows) || ncols < 1 || nrows < 1) {
    throw DataError(source_name + ": NCOLS and NROWS must be positive integers");
  }

  GridGeometry geo;
  geo.cols = static_cast<int>(ncols);
  geo.rows = static_cast<int>(nrows);
  geo.x_origin = *header[2];
  geo.y_origin = *header[3];
  geo.cell_size = *header[4];
  geo.nodata = *header[5];
  validate_geometry(geo);

  std::vector<double> values;
  values.reserve(geo.size());
  int rows_read = 0;
  const int pending_line = line_no;
  bool first = true;
  while (true) {
    if (first && pending) {
      line = *pending;
    } else if (std::getline(in, line)) {
      ++line_no;
    } else {
      break;
    }
    const int this_line = (first && pending) ? pending_line : line_no;
    first = false;
    std::istringstream ls(line);
    std::string token;
    int count = 0;
    while (ls >> token) {
      if (rows_read >= geo.rows) {
        throw DataError(where(source_name, this_line) + ": value count mismatch, more than " +
                        std::to_string(geo.rows) + " data rows");
      }
      values.push_back(parse_number(token, where(source_name, this_line)));
      ++count;
    }
    if (count == 0) continue;
    if (count != geo.cols) {
      throw DataError(where(source_name, this_line) + ": value count mismatch, expected " +
                      std::to_string(geo.cols) + " values, found " + std::to_string(count));
    }
    ++rows_read;
  }
  if (rows_read != geo.rows) {
    throw DataError(where(source_name, line_no) + ": value count mismatch, expected " +
                    std::to_string(geo.rows) + " data rows, found " + std::to_string(rows_read));
  }
  return Grid(geo, std::move(values));
}

Grid read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grid file " + path.string());
  return parse_ascii_grid(in, path.string());
}

std::string format_ascii_grid(const Grid& grid) {
  const auto& g = grid.geometry();
  std::string out;
  out.reserve(grid.size() * 6 + 128);
  out += "NCOLS " + std::to_string(g.cols) + "\n";
  out += "NROWS " + std::to_string(g.rows) + "\n";
  out += "XLLCORNER " + format_number(g.x_origin) + "\n";
  out += "YLLCORNER " + format_number(g.y_origin) + "\n";
  out += "CELLSIZE " + format_number(g.cell_size) + "\n";
  out += "NODATA_VALUE " + format_number(g.nodata) + "\n";
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (c) out += ' ';
      out += format_number(grid.at(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_ascii_grid(const Grid& grid, const std::filesystem::path& path) {
  write_text_file(path, format_ascii_grid(grid));
}

BinaryMask read_mask(const std::filesystem::path& path) {
  return BinaryMask::from_grid(read_ascii_grid(path));
}

LandCoverMap read_land_cover(const std::filesystem::path& path, const Legend& legend,
                             std::string date_tag) {
  return LandCoverMap(read_ascii_grid(path), legend, std::move(date_tag));
}

Legend read_legend(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2 || table.header[0] != "id" || table.header[1] != "name") {
    throw DataError(path.string() + ": legend header must be 'id,name'");
  }
  Legend legend;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string ctx = path.string() + ":" + std::to_string(table.line_numbers[i]);
    const int id = parse_int(table.rows[i][0], ctx);
    if (id < 0) throw DataError(ctx + ": class id must be non-negative");
    if (!legend.emplace(id, table.rows[i][1]).second) {
      throw DataError(ctx + ": duplicate class id " + std::to_string(id));
    }
  }
  return legend;
}

void write_legend(const Legend& legend, const std::filesystem::path& path) {
  std::string out = "id,name\n";
  for (const auto& [id, name] : legend) out += std::to_string(id) + "," + name + "\n";
  write_text_file(path, out);
}

std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  write_text_file(path, encode_ppm(image));
}

RgbImage stretch_composite(const Grid& r, const Grid& g, const Grid& b,
                           const std::array<StretchRange, 3>& stretch) {
  require_same_frame(r.geometry(), g.geometry(), "composite green vs red channel");
  require_same_frame(r.geometry(), b.geometry(), "composite blue vs red channel");
  for (std::size_t k = 0; k < 3; ++k) {
    if (!(stretch[k].min < stretch[k].max)) {
      throw DataError("composite stretch for channel " + std::to_string(k) +
                      " requires min < max");
    }
  }
  const std::array<const Grid*, 3> channels = {&r, &g, &b};
  RgbImage image{r.rows(), r.cols(), std::vector<std::uint8_t>(r.size() * 3, 0)};
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.is_valid(i) || !g.is_valid(i) || !b.is_valid(i)) continue;
    for (std::size_t k = 0; k < 3; ++k) {
      const double t = ((*channels[k])[i] - stretch[k].min) / (stretch[k].max - stretch[k].min);
      image.pixels[i * 3 + k] =
          static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
    }
  }
  return image;
}

void export_ppm(const Grid& r, const Grid& g, const Grid& b,
                const std::array<StretchRange, 3>& stretch, const std::filesystem::path& path) {
  write_ppm(stretch_composite(r, g, b, stretch), path);
}

RgbImage render_land_cover(const LandCoverMap& map) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 10> kPalette = {{
      {34, 110, 34},   {230, 200, 90},  {70, 130, 200}, {200, 60, 60},   {150, 90, 200},
      {240, 140, 40},  {120, 200, 120}, {160, 160, 160}, {90, 60, 30},   {250, 250, 250},
  }};
  std::map<int, std::size_t> slot;
  for (const auto& [id, name] : map.legend()) slot.emplace(id, slot.size());
  RgbImage image{map.geometry().rows, map.geometry().cols,
                 std::vector<std::uint8_t>(map.size() * 3, 0)};
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.is_valid(i)) continue;
    const auto& c = kPalette[slot.at(map.class_at(i)) % kPalette.size()];
    std::copy(c.begin(), c.end(), image.pixels.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  return image;
}

}  // namespace lcm
