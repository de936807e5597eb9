#include "lcm/indices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/kernels.hpp"

namespace lcm {

Grid normalized_difference(const Grid& a, const Grid& b) {
  require_same_frame(a.geometry(), b.geometry(), "normalized difference inputs");
  std::vector<double> out(a.size());
  kernels::normalized_difference(a.values(), b.values(), out, a.nodata(), b.nodata(), a.nodata());
  return Grid(a.geometry(), std::move(out));
}

Grid ndim(const Grid& ndvi, const Grid& ndii, double ndvi_weight) {
  require_same_frame(ndvi.geometry(), ndii.geometry(), "NDVI vs NDII");
  if (!(ndvi_weight >= 0.0 && ndvi_weight <= 1.0)) {
    throw DataError("NDIm weight must lie in [0, 1]");
  }
  std::vector<double> out(ndvi.size());
  kernels::weighted_pair(ndvi.values(), ndii.values(), out, ndvi_weight, 1.0 - ndvi_weight,
                         ndvi.nodata(), ndii.nodata(), ndvi.nodata());
  return Grid(ndvi.geometry(), std::move(out));
}

Grid ternarize(const Grid& grid, TernaryThresholds t) {
  if (!(t.low < t.high)) throw DataError("ternarize requires low threshold < high threshold");
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.is_valid(i)) {
      out[i] = grid.nodata();
      continue;
    }
    const double v = grid[i];
    out[i] = v < t.low ? 0.0 : (v < t.high ? 1.0 : 2.0);
  }
  return Grid(grid.geometry(), std::move(out));
}

TernaryThresholds quantile_thresholds(const Grid& grid, double low_fraction,
                                      double high_fraction) {
  if (!(0.0 <= low_fraction && low_fraction < high_fraction && high_fraction <= 1.0)) {
    throw DataError("quantile fractions must satisfy 0 <= low < high <= 1");
  }
  std::vector<double> v;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_valid(i)) v.push_back(grid[i]);
  }
  if (v.empty()) throw DataError("cannot derive thresholds from an all-nodata grid");
  std::sort(v.begin(), v.end());
  const auto at = [&](double f) {
    auto rank = static_cast<std::size_t>(std::ceil(f * static_cast<double>(v.size())));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
  };
  TernaryThresholds t{at(low_fraction), at(high_fraction)};
  if (!(t.low < t.high)) t.high = std::nextafter(t.low, std::numeric_limits<double>::infinity());
  return t;
}

ChangeComposite change_composite(const Grid& l1, const Grid& l2, const Grid& l3) {
  require_same_frame(l1.geometry(), l2.geometry(), "change composite date 2 vs date 1");
  require_same_frame(l1.geometry(), l3.geometry(), "change composite date 3 vs date 1");
  static constexpr std::uint8_t kIntensity[3] = {0, 128, 255};
  const std::array<const Grid*, 3> dates = {&l1, &l2, &l3};
  std::vector<double> codes(l1.size());
  RgbImage image{l1.rows(), l1.cols(), std::vector<std::uint8_t>(l1.size() * 3, 0)};
  for (std::size_t i = 0; i < l1.size(); ++i) {
    std::array<int, 3> lv{};
    bool missing = false;
    for (std::size_t d = 0; d < 3; ++d) {
      const Grid& g = *dates[d];
      if (!g.is_valid(i)) {
        missing = true;
        continue;
      }
      const double v = g[i];
      if (v != 0.0 && v != 1.0 && v != 2.0) {
        throw DataError("change composite: date " + std::to_string(d + 1) + " cell " +
                        std::to_string(i) + " holds non-ternary value " + format_number(v));
      }
      lv[d] = static_cast<int>(v);
    }
    if (missing) {
      codes[i] = l1.nodata();
      continue;
    }
    codes[i] = 9 * lv[0] + 3 * lv[1] + lv[2];
    for (std::size_t d = 0; d < 3; ++d) image.pixels[i * 3 + d] = kIntensity[lv[d]];
  }
  return {Grid(l1.geometry(), std::move(codes)), std::move(image)};
}

std::array<TernaryLevel, 3> decode_change(int code) {
  if (code < 0 || code > 26) throw DataError("change code " + std::to_string(code) + " not in 0..26");
  return {static_cast<TernaryLevel>(code / 9), static_cast<TernaryLevel>((code / 3) % 3),
          static_cast<TernaryLevel>(code % 3)};
}

DynamicsGrouping::DynamicsGrouping(std::array<int, 27> category_of_code,
                                   std::vector<std::string> names)
    : category_of_code_(category_of_code), names_(std::move(names)) {
  std::set<int> used;
  for (std::size_t code = 0; code < 27; ++code) {
    const int c = category_of_code_[code];
    if (c < 0 || static_cast<std::size_t>(c) >= names_.size()) {
      throw DataError("grouping: code " + std::to_string(code) + " maps to unknown category " +
                      std::to_string(c));
    }
    used.insert(c);
  }
  if (used.size() != names_.size()) {
    throw DataError("grouping: category ids must be contiguous from 0 and all used");
  }
}

DynamicsGrouping DynamicsGrouping::standard() {
  enum : int {
    kStableHigh,
    kStableMedium,
    kStableLow,
    kSteadyLoss,
    kLossAfterT1,
    kLossAfterT2,
    kRegrowthAfterT1,
    kRegrowthAfterT2,
    kLossThenRegrowth,
    kRegrowthThenLoss,
  };
  std::array<int, 27> table{};
  for (int code = 0; code < 27; ++code) {
    const int l1 = code / 9, l2 = (code / 3) % 3, l3 = code % 3;
    const int d1 = (l2 > l1) - (l2 < l1);
    const int d2 = (l3 > l2) - (l3 < l2);
    int cat = 0;
    if (d1 == 0 && d2 == 0) {
      cat = l1 == 2 ? kStableHigh : (l1 == 1 ? kStableMedium : kStableLow);
    } else if (d1 < 0 && d2 < 0) {
      cat = kSteadyLoss;
    } else if (d1 < 0 && d2 == 0) {
      cat = kLossAfterT1;
    } else if (d1 == 0 && d2 < 0) {
      cat = kLossAfterT2;
    } else if (d1 > 0 && d2 >= 0) {
      cat = kRegrowthAfterT1;  // includes steady regrowth (low, medium, high)
    } else if (d1 == 0 && d2 > 0) {
      cat = kRegrowthAfterT2;
    } else if (d1 < 0 && d2 > 0) {
      cat = kLossThenRegrowth;
    } else {
      cat = kRegrowthThenLoss;
    }
    table[static_cast<std::size_t>(code)] = cat;
  }
  return DynamicsGrouping(table, {"stable high vigour", "stable medium vigour",
                                  "stable cleared/stressed", "steady loss", "loss after t1",
                                  "loss after t2", "regrowth after t1", "regrowth after t2",
                                  "loss then regrowth", "regrowth then loss"});
}

DynamicsGrouping DynamicsGrouping::read_csv(const std::filesystem::path& path) {
  const CsvTable t = lcm::read_csv(path);
  if (t.header != std::vector<std::string>{"code", "category_id", "category_name"}) {
    throw DataError(path.string() + ": grouping header must be 'code,category_id,category_name'");
  }
  std::array<int, 27> table;
  table.fill(-1);
  std::map<int, std::string> names;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string ctx = path.string() + ":" + std::to_string(t.line_numbers[r]);
    const int code = parse_int(t.rows[r][0], ctx);
    const int cat = parse_int(t.rows[r][1], ctx);
    if (code < 0 || code > 26) throw DataError(ctx + ": code outside 0..26");
    if (table[static_cast<std::size_t>(code)] != -1) throw DataError(ctx + ": duplicate code");
    table[static_cast<std::size_t>(code)] = cat;
    auto [it, inserted] = names.emplace(cat, t.rows[r][2]);
    if (!inserted && it->second != t.rows[r][2]) {
      throw DataError(ctx + ": category " + std::to_string(cat) + " has two names");
    }
  }
  for (std::size_t code = 0; code < 27; ++code) {
    if (table[code] == -1) {
      throw DataError(path.string() + ": grouping is missing code " + std::to_string(code));
    }
  }
  std::vector<std::string> name_list;
  for (const auto& [id, name] : names) {
    if (id != static_cast<int>(name_list.size())) {
      throw DataError(path.string() + ": category ids must be contiguous from 0");
    }
    name_list.push_back(name);
  }
  return DynamicsGrouping(table, std::move(name_list));
}

std::string DynamicsGrouping::to_csv() const {
  std::string out = "code,category_id,category_name\n";
  for (std::size_t code = 0; code < 27; ++code) {
    const int c = category_of_code_[code];
    out += std::to_string(code) + "," + std::to_string(c) + "," +
           names_[static_cast<std::size_t>(c)] + "\n";
  }
  return out;
}

int DynamicsGrouping::category(int code) const {
  if (code < 0 || code > 26) throw DataError("change code " + std::to_string(code) + " not in 0..26");
  return category_of_code_[static_cast<std::size_t>(code)];
}

Legend DynamicsGrouping::legend() const {
  Legend legend;
  for (std::size_t i = 0; i < names_.size(); ++i) legend.emplace(static_cast<int>(i), names_[i]);
  return legend;
}

LandCoverMap group_dynamics(const Grid& codes, const DynamicsGrouping& grouping) {
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!codes.is_valid(i)) {
      out[i] = codes.nodata();
      continue;
    }
    const double v = codes[i];
    if (v != std::floor(v)) throw DataError("change code " + format_number(v) + " is not an integer");
    out[i] = grouping.category(static_cast<int>(v));
  }
  return LandCoverMap(Grid(codes.geometry(), std::move(out)), grouping.legend(), "dynamics");
}

}  // namespace lcm
