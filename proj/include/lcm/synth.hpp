#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lcm/grid.hpp"
#include "lcm/markov.hpp"

namespace lcm {

// Parameters of a synthetic landscape series. Change between consecutive dates follows
// `transitions` rescaled to each interval; changing pixels are picked with probability that
// grows with a per-class suitability and with same-class neighbours.
struct SynthSpec {
  int rows = 128;
  int cols = 128;
  double cell_size = 30.0;
  Legend legend{{1, "forest"}, {2, "secondary regrowth"}, {3, "milpa/pasture"}};
  std::vector<double> initial_shares{0.6, 0.15, 0.25};  // per legend class, sums to 1
  int patches = 60;                                     // Voronoi seeds of the first map
  TransitionMatrix transitions;                         // ground truth, per time_span years
  std::vector<double> dates{1988, 1992, 2000};
  double suitability_power = 4.0;  // sharpness of the suitability preference
  double contiguity_floor = 0.05;
  int roads = 3;
  int rivers = 2;
  std::uint64_t seed = 1;
};

// The default three-class deforestation frontier with yearly transition rates.
SynthSpec default_synth_spec();

struct SynthLandscape {
  std::vector<LandCoverMap> maps;  // one per date
  std::vector<std::string> criterion_names{"dist_road", "dist_river", "elevation"};
  std::vector<Grid> criteria;
  BinaryMask roads;
  BinaryMask rivers;
  // Per-class 0..255 preference used to place changes, in legend order.
  std::vector<Grid> suitabilities;
  TransitionMatrix truth;
};

void validate_synth_spec(const SynthSpec& spec);
SynthLandscape generate_synthetic_landscape(const SynthSpec& spec);

// Writes legend.csv, map_<date>.asc, <criterion>.asc, roads.asc, rivers.asc, truth.csv.
void write_synthetic_landscape(const SynthLandscape& landscape, const SynthSpec& spec,
                               const std::filesystem::path& dir);

}  // namespace lcm
