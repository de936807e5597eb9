#include "lcm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lcm/allocate.hpp"
#include "lcm/ascii_grid.hpp"
#include "lcm/criteria.hpp"
#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.transitions.class_ids = {1, 2, 3};
  s.transitions.probs = {0.97, 0.00, 0.03,   //
                         0.03, 0.92, 0.05,   //
                         0.00, 0.06, 0.94};
  s.transitions.time_span = 1.0;
  return s;
}

void validate_synth_spec(const SynthSpec& s) {
  if (s.rows < 2 || s.cols < 2) throw ConfigError("synthetic landscape needs at least 2x2 cells");
  if (!(s.cell_size > 0.0)) throw ConfigError("synthetic cell size must be positive");
  if (s.legend.empty()) throw ConfigError("synthetic legend is empty");
  if (s.initial_shares.size() != s.legend.size()) {
    throw ConfigError("one initial share per legend class required");
  }
  double total = 0.0;
  for (double v : s.initial_shares) {
    if (!(v >= 0.0)) throw ConfigError("initial shares must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("initial shares must sum to 1");
  if (s.patches < 1) throw ConfigError("at least one patch seed required");
  std::vector<int> ids;
  for (const auto& [id, name] : s.legend) ids.push_back(id);
  if (s.transitions.class_ids != ids) {
    throw ConfigError("transition matrix classes differ from the legend");
  }
  if (s.dates.size() < 2) throw ConfigError("at least two dates required");
  for (std::size_t k = 1; k < s.dates.size(); ++k) {
    if (!(s.dates[k] > s.dates[k - 1])) throw ConfigError("dates must increase strictly");
  }
  if (!(s.suitability_power >= 0.0) || !(s.contiguity_floor >= 0.0)) {
    throw ConfigError("suitability power and contiguity floor must be non-negative");
  }
  if (s.roads < 1 || s.rivers < 1) throw ConfigError("at least one road and one river required");
  // Row checks and span feasibility are delegated to scale_transition.
  for (std::size_t k = 1; k < s.dates.size(); ++k) {
    scale_transition(s.transitions, s.dates[k] - s.dates[k - 1]);
  }
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Random-walk lines crossing the grid from one edge to the opposite one.
BinaryMask random_lines(const GridGeometry& geo, int count, bool horizontal, Rng& rng) {
  std::vector<std::uint8_t> cells(geo.size(), 0);
  const int len = horizontal ? geo.cols : geo.rows;
  const int span = horizontal ? geo.rows : geo.cols;
  std::uniform_int_distribution<int> start(0, span - 1);
  std::uniform_int_distribution<int> step(-1, 1);
  for (int k = 0; k < count; ++k) {
    int pos = start(rng);
    for (int t = 0; t < len; ++t) {
      const int r = horizontal ? pos : t;
      const int c = horizontal ? t : pos;
      cells[static_cast<std::size_t>(r) * geo.cols + c] = 1;
      const int next = std::clamp(pos + step(rng), 0, span - 1);
      if (next != pos) {
        // Keep the line 4-connected.
        const int r2 = horizontal ? next : t;
        const int c2 = horizontal ? t : next;
        cells[static_cast<std::size_t>(r2) * geo.cols + c2] = 1;
      }
      pos = next;
    }
  }
  return BinaryMask(geo, std::move(cells));
}

Grid elevation_field(const GridGeometry& geo, Rng& rng) {
  std::vector<double> v(geo.size());
  struct Bump {
    double r, c, height, radius;
  };
  std::vector<Bump> bumps;
  for (int k = 0; k < 6; ++k) {
    bumps.push_back({uniform(rng) * geo.rows, uniform(rng) * geo.cols, 50.0 + 250.0 * uniform(rng),
                     0.1 * geo.rows + 0.25 * geo.rows * uniform(rng)});
  }
  const double tilt = 100.0 * uniform(rng);
  for (int r = 0; r < geo.rows; ++r) {
    for (int c = 0; c < geo.cols; ++c) {
      double h = 50.0 + tilt * r / geo.rows;
      for (const auto& b : bumps) {
        const double d2 = (r - b.r) * (r - b.r) + (c - b.c) * (c - b.c);
        h += b.height * std::exp(-d2 / (2.0 * b.radius * b.radius));
      }
      v[static_cast<std::size_t>(r) * geo.cols + c] = std::round(h * 10.0) / 10.0;
    }
  }
  return Grid(geo, std::move(v));
}

Grid linear_score(const Grid& g, bool increasing) {
  const auto vals = g.values();
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  if (*lo == *hi) return Grid::filled(g.geometry(), 255.0);
  FuzzySpec spec;
  spec.shape = FuzzyShape::linear;
  spec.direction = increasing ? FuzzyDirection::increasing : FuzzyDirection::decreasing;
  spec.points = {*lo, *hi, 0.0, 0.0};
  return fuzzy_standardize(g, spec);
}

// Class preferences by legend position: forest favours high ground, regrowth favours
// remote cells, clearing favours road then river access; further classes favour rivers.
std::vector<Grid> class_suitabilities(const SynthLandscape& l, std::size_t n) {
  const Grid near_road = linear_score(l.criteria[0], false);
  const Grid near_river = linear_score(l.criteria[1], false);
  const Grid far_road = linear_score(l.criteria[0], true);
  const Grid high = linear_score(l.criteria[2], true);
  std::vector<double> access(near_road.size());
  for (std::size_t i = 0; i < access.size(); ++i) {
    access[i] = std::round(0.7 * near_road[i] + 0.3 * near_river[i]);
  }
  const Grid clearing(near_road.geometry(), std::move(access));
  std::vector<Grid> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (n == 1) {
      out.push_back(high);
    } else if (k == 0) {
      out.push_back(high);
    } else if (k == n - 1) {
      out.push_back(clearing);
    } else if (k == 1) {
      out.push_back(far_road);
    } else {
      out.push_back(near_river);
    }
  }
  return out;
}

// Voronoi patches. Cells are labelled largest first, each drawn with weight proportional to
// the class's unfilled share times its suitability at the seed, so the pixel shares track
// `initial_shares` to within about one cell.
LandCoverMap initial_map(const SynthSpec& s, const SynthLandscape& l, const std::vector<int>& ids,
                         Rng& rng) {
  const GridGeometry geo = l.criteria[0].geometry();
  std::vector<std::size_t> seeds;
  std::uniform_int_distribution<int> row(0, s.rows - 1), col(0, s.cols - 1);
  for (int k = 0; k < s.patches; ++k) {
    seeds.push_back(static_cast<std::size_t>(row(rng)) * s.cols + col(rng));
  }
  std::vector<std::size_t> owner(geo.size());
  std::vector<std::int64_t> cell_size(seeds.size(), 0);
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      long best = -1;
      std::size_t who = 0;
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const long dr = r - static_cast<long>(seeds[k] / s.cols);
        const long dc = c - static_cast<long>(seeds[k] % s.cols);
        if (best < 0 || dr * dr + dc * dc < best) {
          best = dr * dr + dc * dc;
          who = k;
        }
      }
      const std::size_t i = static_cast<std::size_t>(r) * s.cols + c;
      owner[i] = who;
      ++cell_size[who];
    }
  }
  std::vector<std::size_t> order(seeds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cell_size[a] > cell_size[b]; });
  std::vector<double> unfilled(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    unfilled[j] = s.initial_shares[j] * static_cast<double>(geo.size());
  }
  std::vector<int> label(seeds.size(), ids.front());
  for (std::size_t k : order) {
    if (cell_size[k] == 0) continue;
    std::vector<double> w(ids.size());
    double total = 0.0;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      w[j] = std::max(unfilled[j], 0.0) * (l.suitabilities[j][seeds[k]] / 255.0 + 0.05);
      total += w[j];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    } else {
      pick = static_cast<std::size_t>(std::max_element(unfilled.begin(), unfilled.end()) - unfilled.begin());
    }
    label[k] = ids[pick];
    unfilled[pick] -= static_cast<double>(cell_size[k]);
  }
  std::vector<double> v(geo.size());
  for (std::size_t i = 0; i < geo.size(); ++i) v[i] = label[owner[i]];
  return LandCoverMap(Grid(geo, std::move(v)), s.legend, format_number(s.dates.front()));
}

LandCoverMap evolve(const LandCoverMap& map, const TransitionMatrix& tm,
                    const std::vector<Grid>& suit, const SynthSpec& s, const std::string& tag,
                    Rng& rng) {
  const std::size_t n = tm.order();
  const auto& ids = tm.class_ids;
  std::vector<Grid> contiguity;
  for (int id : ids) contiguity.push_back(contiguity_filter(map, id, 3));
  std::vector<std::vector<std::size_t>> hosts(n);
  for (std::size_t i = 0; i < map.size(); ++i) hosts[tm.index_of(map.class_at(i))].push_back(i);

  std::vector<double> out(map.grid().values().begin(), map.grid().values().end());
  for (std::size_t h = 0; h < n; ++h) {
    std::vector<std::size_t> pool = hosts[h];
    // Conditional binomials give a multinomial split of the host's pixels.
    std::int64_t left = static_cast<std::int64_t>(pool.size());
    double mass = 1.0;
    std::vector<std::int64_t> counts(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == h) continue;
      const double p = tm.at(h, j);
      if (left == 0 || p <= 0.0) continue;
      const double cond = std::min(1.0, p / mass);
      counts[j] = std::binomial_distribution<std::int64_t>(left, cond)(rng);
      left -= counts[j];
      mass -= p;
      if (mass <= 0.0) mass = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == h || counts[j] == 0) continue;
      // Weighted sampling without replacement: largest log(u) / w wins.
      std::vector<std::pair<double, std::size_t>> keys;
      keys.reserve(pool.size());
      for (std::size_t i : pool) {
        const double w = std::max(1e-12, std::pow(suit[j][i] / 255.0, s.suitability_power) *
                                             (s.contiguity_floor + contiguity[j][i]));
        double u = uniform(rng);
        if (u <= 0.0) u = 1e-300;
        keys.push_back({std::log(u) / w, i});
      }
      const auto take = static_cast<std::ptrdiff_t>(counts[j]);
      std::partial_sort(keys.begin(), keys.begin() + take, keys.end(),
                        [](const auto& a, const auto& b) {
                          return a.first > b.first || (a.first == b.first && a.second < b.second);
                        });
      std::vector<std::size_t> chosen;
      for (std::ptrdiff_t k = 0; k < take; ++k) {
        out[keys[static_cast<std::size_t>(k)].second] = ids[j];
        chosen.push_back(keys[static_cast<std::size_t>(k)].second);
      }
      std::sort(chosen.begin(), chosen.end());
      std::vector<std::size_t> rest;
      std::set_difference(pool.begin(), pool.end(), chosen.begin(), chosen.end(),
                          std::back_inserter(rest));
      pool = std::move(rest);
    }
  }
  return LandCoverMap(Grid(map.geometry(), std::move(out)), map.legend(), tag);
}

}  // namespace

SynthLandscape generate_synthetic_landscape(const SynthSpec& s) {
  validate_synth_spec(s);
  Rng rng(s.seed);
  GridGeometry geo;
  geo.rows = s.rows;
  geo.cols = s.cols;
  geo.cell_size = s.cell_size;
  geo.x_origin = 500000.0;
  geo.y_origin = 1800000.0;
  geo.nodata = kDefaultNodata;

  SynthLandscape l;
  l.truth = s.transitions;
  l.truth.counts.clear();
  l.roads = random_lines(geo, s.roads, true, rng);
  l.rivers = random_lines(geo, s.rivers, false, rng);
  l.criteria.push_back(distance_transform(l.roads));
  l.criteria.push_back(distance_transform(l.rivers));
  l.criteria.push_back(elevation_field(geo, rng));
  l.suitabilities = class_suitabilities(l, s.legend.size());

  const std::vector<int>& ids = s.transitions.class_ids;
  l.maps.push_back(initial_map(s, l, ids, rng));
  for (std::size_t k = 1; k < s.dates.size(); ++k) {
    const TransitionMatrix step = scale_transition(s.transitions, s.dates[k] - s.dates[k - 1]);
    l.maps.push_back(evolve(l.maps.back(), step, l.suitabilities, s, format_number(s.dates[k]), rng));
  }
  return l;
}

void write_synthetic_landscape(const SynthLandscape& l, const SynthSpec& s,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_legend(s.legend, dir / "legend.csv");
  for (std::size_t k = 0; k < l.maps.size(); ++k) {
    write_ascii_grid(l.maps[k].grid(), dir / ("map_" + format_number(s.dates[k]) + ".asc"));
  }
  for (std::size_t k = 0; k < l.criteria.size(); ++k) {
    write_ascii_grid(l.criteria[k], dir / (l.criterion_names[k] + ".asc"));
  }
  write_ascii_grid(l.roads.to_grid(), dir / "roads.asc");
  write_ascii_grid(l.rivers.to_grid(), dir / "rivers.asc");
  write_text_file(dir / "truth.csv", format_transition_csv(l.truth));
}

}  // namespace lcm
