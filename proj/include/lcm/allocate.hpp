#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcm/grid.hpp"
#include "lcm/markov.hpp"

namespace lcm {

struct AllocationTargets {
  std::vector<int> class_ids;          // ascending
  std::vector<std::int64_t> counts;    // pixels per class
};

// Ordinal ranks, 0 = most suitable, ties by row-major order. Pixels that are nodata or
// constrained out get nodata.
Grid rank_suitability(const Grid& suitability, const BinaryMask* constraint = nullptr);

// Multi-objective land allocation. Each round every class with unmet demand claims its
// best-ranked unassigned pixels; a pixel claimed by several classes goes to the class that
// ranks it best (ties to the lower class id). Rounds repeat until all targets are met.
// Eligible pixels are those valid in every suitability grid (and in `eligible` when given);
// the targets must add up to their number.
LandCoverMap mola(const std::vector<Grid>& suitabilities, const AllocationTargets& targets,
                  const Legend& legend, const BinaryMask* eligible = nullptr);

// Fraction of valid kernel neighbours (centre excluded) labelled class_id.
Grid contiguity_filter(const LandCoverMap& current, int class_id, int kernel_size);

enum class ContiguityMode { filter, none };

struct CaParams {
  int kernel_size = 5;
  int iterations = 1;
  // Cumulative share of the change allocated after each iteration; empty means k / iterations.
  std::vector<double> fractions;
  ContiguityMode contiguity = ContiguityMode::filter;
  double contiguity_floor = 0.01;
  bool keep_stages = false;  // store the map after every iteration
};

struct ChangeLogEntry {
  int iteration = 0;
  int class_id = 0;
  std::int64_t allocated = 0;
  std::int64_t target = 0;
};

struct CaResult {
  LandCoverMap map;
  std::vector<ChangeLogEntry> log;
  // Integer transition counts realised by the final iteration (row = base class).
  std::vector<std::int64_t> transitions;
  std::vector<int> class_ids;
  std::vector<LandCoverMap> stages;
};

// Rounds expected transitions to integers whose rows sum to `row_totals` and columns to
// `column_totals`, moving each entry by less than one where possible.
std::vector<std::int64_t> controlled_rounding(const ExpectedTransitions& expected,
                                              const std::vector<std::int64_t>& row_totals,
                                              const std::vector<std::int64_t>& column_totals);

// CA-Markov integration. The projected transitions are reached over params.iterations steps:
// at step k each host class hands fraction f_k of its outgoing transitions to the claimant
// classes, allocated by mola within the host's pixels of the base map on suitabilities
// weighted by (floor + contiguity of the step k-1 map).
CaResult ca_markov(const LandCoverMap& current, const ExpectedTransitions& transitions,
                   const std::vector<Grid>& suitabilities, const CaParams& params);
CaResult ca_markov(const LandCoverMap& current, const TransitionMatrix& tm,
                   const std::vector<Grid>& suitabilities, const CaParams& params);

// Mean over labelled pixels of the share of valid 8-neighbours carrying the same label.
double clumping_index(const LandCoverMap& map);

std::string format_change_log_csv(const std::vector<ChangeLogEntry>& log);

}  // namespace lcm
