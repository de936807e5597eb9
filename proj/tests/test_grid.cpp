#include <doctest.h>

#include <random>
#include <sstream>

#include "lcm/ascii_grid.hpp"
#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "test_util.hpp"

using namespace lcm;
using testutil::geometry;
using testutil::grid;

namespace {

Grid parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ascii_grid(in, "inline");
}

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("ascii grid parse") {
  const Grid g = parse(
      "NCOLS 2\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 30\nNODATA_VALUE -9999\n1 2\n");
  CHECK(g.rows() == 1);
  CHECK(g.cols() == 2);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 2.0);
  CHECK(g.geometry().cell_size == 30.0);

  const Grid m = parse("ncols 2\nnrows 1\ncellsize 1\nxllcorner 0\nyllcorner 0\nnodata_value -9999\n"
                       "-9999 4\n");
  CHECK_FALSE(m.is_valid(0));
  CHECK(m.is_valid(1));
}

TEST_CASE("ascii grid errors name the problem") {
  CHECK(message_of("NCOLS 2\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nNODATA_VALUE -9999\n1 2\n")
            .find("CELLSIZE") != std::string::npos);
  CHECK(message_of("NCOLS 2\nNCOLS 2\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\n"
                   "NODATA_VALUE -9999\n1 2\n")
            .find("inline:2:") != std::string::npos);
  const auto short_row = message_of(
      "NCOLS 2\nNROWS 2\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\nNODATA_VALUE -9999\n1 2\n3\n");
  CHECK(short_row.find("inline:8:") != std::string::npos);
  const auto bad = message_of(
      "NCOLS 2\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\nNODATA_VALUE -9999\n1 x\n");
  CHECK(bad.find("inline:7:") != std::string::npos);
}

TEST_CASE("ascii grid 1x1 zero writes a single data token") {
  const Grid g = grid(1, 1, {0.0});
  const std::string text = format_ascii_grid(g);
  std::istringstream in(text);
  std::string line, last;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    last = line;
  }
  CHECK(lines == 7);
  CHECK(trim(last) == "0");
}

TEST_CASE("ascii grid round trip is exact") {
  std::mt19937_64 rng(11);
  const auto dir = testutil::scratch("grid_roundtrip");
  for (int k = 0; k < 20; ++k) {
    std::uniform_int_distribution<int> dim(1, 9);
    GridGeometry geo = geometry(dim(rng), dim(rng), 0.1 * (k + 1));
    geo.x_origin = -123.456789 * k;
    geo.y_origin = 1e6 / 3.0;
    geo.nodata = k % 2 ? -9999.0 : -3.4e38;
    Grid src = testutil::random_grid(rng, geo.rows, geo.cols, -1e5, 1e5, 0.2);
    std::vector<double> v(src.values().begin(), src.values().end());
    for (auto& x : v) {
      if (x == kDefaultNodata) x = geo.nodata;
    }
    const Grid g(geo, v);
    write_ascii_grid(g, dir / "g.asc");
    CHECK(read_ascii_grid(dir / "g.asc") == g);
  }
  const Grid empty = Grid::filled(geometry(3, 4), kDefaultNodata);
  write_ascii_grid(empty, dir / "e.asc");
  CHECK(read_ascii_grid(dir / "e.asc") == empty);
}

TEST_CASE("apply_mask") {
  const Grid g = grid(2, 2, {1, 2, 3, 4});
  CHECK(apply_mask(g, BinaryMask::filled(g.geometry(), true)) == g);
  const Grid none = apply_mask(g, BinaryMask::filled(g.geometry(), false));
  CHECK(none.valid_count() == 0);
  const BinaryMask diag(g.geometry(), {1, 0, 0, 1});
  const Grid m = apply_mask(g, diag);
  CHECK(m[0] == 1.0);
  CHECK_FALSE(m.is_valid(1));
  CHECK_FALSE(m.is_valid(2));
  CHECK(m[3] == 4.0);
  CHECK(apply_mask(m, diag) == m);
  CHECK_THROWS_AS(apply_mask(g, BinaryMask::filled(geometry(2, 3), true)), DataError);
}

TEST_CASE("stack_bands") {
  const Grid a = grid(2, 2, {1, 2, 3, 4});
  const MultiBandImage img = stack_bands({a, a, a}, {"red", "NIR", "MIR1"});
  CHECK(img.band_count() == 3);
  CHECK(img.index_of("NIR") == 1);
  CHECK_THROWS_AS(stack_bands({a, a}, {"red", "red"}), DataError);
  const Grid coarse(geometry(2, 2, 2.0), {1, 2, 3, 4});
  try {
    stack_bands({a, a, coarse}, {"a", "b", "c"});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("binary mask rejects non-binary cells") {
  CHECK_THROWS_AS(BinaryMask::from_grid(grid(1, 2, {0, 2})), DataError);
  const BinaryMask m = BinaryMask::from_grid(grid(1, 3, {0, 1, kDefaultNodata}));
  CHECK(m.count() == 1);
}

TEST_CASE("land cover map requires legend classes") {
  CHECK_THROWS_AS(testutil::map(1, 2, {1, 3}, 2), DataError);
  CHECK_THROWS_AS(testutil::map(1, 2, {1, 1.5}, 2), DataError);
  const auto m = testutil::map(1, 3, {1, 2, kDefaultNodata}, 2);
  CHECK(m.class_counts().at(1) == 1);
}

TEST_CASE("ppm export") {
  const Grid lo = grid(1, 2, {0, kDefaultNodata});
  const Grid hi = grid(1, 2, {10, 10});
  const std::array<StretchRange, 3> s{StretchRange{0, 10}, StretchRange{0, 10}, StretchRange{0, 10}};
  const RgbImage img = stretch_composite(lo, lo, hi, s);
  CHECK(img.pixels == std::vector<std::uint8_t>{0, 0, 255, 0, 0, 0});
  const std::string bytes = encode_ppm(img);
  const std::string header = "P6\n2 1\n255\n";
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(bytes.size() - header.size() == 3u * 1 * 2);
  const std::array<StretchRange, 3> bad{StretchRange{1, 1}, s[1], s[2]};
  CHECK_THROWS(stretch_composite(lo, lo, hi, bad));
  CHECK_THROWS(stretch_composite(lo, lo, grid(2, 1, {1, 2}), s));
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e9, 1e9);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) / (k + 1);
    CHECK(parse_number(format_number(v), "t") == v);
  }
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(1988.0) == "1988");
}

TEST_CASE("legend csv round trip") {
  const auto dir = testutil::scratch("legend");
  const Legend l{{1, "forest"}, {3, "milpa/pasture"}};
  write_legend(l, dir / "legend.csv");
  CHECK(read_legend(dir / "legend.csv") == l);
}
