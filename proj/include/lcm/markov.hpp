#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcm/grid.hpp"

namespace lcm {

struct CountMatrix {
  std::vector<int> class_ids;
  std::vector<std::int64_t> counts;  // row = earlier class, column = later class

  std::size_t order() const noexcept { return class_ids.size(); }
  std::int64_t at(std::size_t from, std::size_t to) const { return counts[from * order() + to]; }
  std::int64_t total() const noexcept;
};

struct TransitionMatrix {
  std::vector<int> class_ids;
  std::vector<double> probs;          // row-stochastic, row-major
  double time_span = 1.0;             // years
  std::vector<std::int64_t> counts;   // source cross-tabulation, empty when not known

  std::size_t order() const noexcept { return class_ids.size(); }
  double at(std::size_t from, std::size_t to) const { return probs[from * order() + to]; }
  // Position of a class id; throws DataError when absent.
  std::size_t index_of(int class_id) const;
};

// P(next | prev, curr) from three dated maps. Pairs never observed are answered by the
// first-order matrix of the last two maps and flagged.
struct SecondOrderTable {
  std::vector<int> class_ids;
  std::vector<double> probs;     // [(prev * n + curr) * n + next]
  std::vector<bool> fallback;    // [prev * n + curr]
  std::vector<std::int64_t> support;  // pixels observed per pair
  TransitionMatrix first_order;

  std::size_t order() const noexcept { return class_ids.size(); }
  double at(std::size_t prev, std::size_t curr, std::size_t next) const {
    return probs[(prev * order() + curr) * order() + next];
  }
  bool is_fallback(std::size_t prev, std::size_t curr) const {
    return fallback[prev * order() + curr];
  }
};

// Legends of both maps must list the same class ids.
CountMatrix crosstab(const LandCoverMap& earlier, const LandCoverMap& later,
                     const BinaryMask* mask = nullptr);

// Row-normalised counts; an empty row becomes persistence (1 on the diagonal).
TransitionMatrix transition_probabilities(const CountMatrix& counts, double time_span);

// Linear rescaling of the off-diagonal mass by target_span / time_span. A row whose
// off-diagonal sum would exceed 1 is scaled back to 1; the diagonal takes the remainder.
// Throws NumericalError if any single entry would exceed 1.
TransitionMatrix scale_transition(const TransitionMatrix& tm, double target_span);

SecondOrderTable second_order_transitions(const LandCoverMap& m1, const LandCoverMap& m2,
                                          const LandCoverMap& m3);

// One probability grid per class of the matrix, in class_ids order.
std::vector<Grid> conditional_probability_maps(const LandCoverMap& current,
                                               const TransitionMatrix& tm);
std::vector<Grid> conditional_probability_maps(const LandCoverMap& previous,
                                               const LandCoverMap& current,
                                               const SecondOrderTable& table);

// Expected pixel counts moving from class i (row) to class j (column).
struct ExpectedTransitions {
  std::vector<int> class_ids;
  std::vector<double> values;  // row-major

  std::size_t order() const noexcept { return class_ids.size(); }
  double at(std::size_t from, std::size_t to) const { return values[from * order() + to]; }
};

ExpectedTransitions expected_transitions(const LandCoverMap& current, const TransitionMatrix& tm);
ExpectedTransitions expected_transitions(const LandCoverMap& previous, const LandCoverMap& current,
                                         const SecondOrderTable& table);

struct ExpectedAreas {
  std::vector<int> class_ids;
  std::vector<std::int64_t> current;
  std::vector<double> expected;
  std::vector<std::int64_t> allocated;  // largest-remainder rounding of `expected`
};

ExpectedAreas expected_areas(const LandCoverMap& current, const TransitionMatrix& tm);
ExpectedAreas expected_areas(const ExpectedTransitions& transitions);

// Floors each value then hands the remaining units to the largest fractional parts, ties to the
// lowest index, so that the result sums to `total`.
std::vector<std::int64_t> largest_remainder(std::span<const double> values, std::int64_t total);

std::string format_transition_csv(const TransitionMatrix& tm);
TransitionMatrix read_transition_csv(const std::filesystem::path& path);
std::string format_counts_csv(const CountMatrix& counts);
std::string format_second_order_csv(const SecondOrderTable& table);
std::string format_expected_areas_csv(const ExpectedAreas& areas);

}  // namespace lcm
