#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lcm/grid.hpp"

namespace lcm {

// Squared Euclidean distance, in cell units, from every cell centre to the nearest target
// cell centre. Exact integer arithmetic (separable lower-envelope transform).
std::vector<std::int64_t> squared_distance_cells(const BinaryMask& targets);

// Distance in map units: sqrt(squared cells) * cell_size. Targets are 0.
Grid distance_transform(const BinaryMask& targets, double cell_size);
Grid distance_transform(const BinaryMask& targets);

enum class FuzzyShape { linear, sigmoidal, j_shaped };
enum class FuzzyDirection { increasing, decreasing, symmetric };

struct FuzzySpec {
  FuzzyShape shape = FuzzyShape::linear;
  FuzzyDirection direction = FuzzyDirection::increasing;
  // a, b for monotone directions; a, b, c, d for symmetric.
  std::array<double, 4> points{0.0, 0.0, 0.0, 0.0};
};

void validate_fuzzy_spec(const FuzzySpec& spec);
// "shape,direction,a,b[,c,d]", e.g. "linear,decreasing,0,1500".
FuzzySpec parse_fuzzy_spec(const std::string& text);
std::string to_string(const FuzzySpec& spec);

// Membership in [0, 1]. Ramps: linear, sigmoidal m = cos^2(pi/2 * (b - v) / (b - a)),
// j-shaped m = 1 / (1 + ((v - b) / (b - a))^2); decreasing ramps are mirrored.
double fuzzy_membership(double value, const FuzzySpec& spec);

// round(255 * membership), half away from zero; nodata preserved.
Grid fuzzy_standardize(const Grid& grid, const FuzzySpec& spec);

struct ReclassRule {
  double from_min = 0.0;  // inclusive
  double from_max = 0.0;  // exclusive
  double to_value = 0.0;
};

// Values outside every interval become nodata.
Grid reclass(const Grid& grid, const std::vector<ReclassRule>& table);
// "min:max:value;min:max:value;..."
std::vector<ReclassRule> parse_reclass_table(const std::string& text);

enum class Comparison { less, less_equal, greater, greater_equal };

struct Threshold {
  Comparison op = Comparison::greater_equal;
  double value = 0.0;
};

struct CategorySet {
  std::set<int> categories;
};

using ConstraintPredicate = std::variant<Threshold, CategorySet>;

// ">=500", "<1200", "in:1,2,5".
ConstraintPredicate parse_constraint_predicate(const std::string& text);

// 1 where the predicate holds; nodata -> 0.
BinaryMask make_constraint(const Grid& grid, const ConstraintPredicate& predicate);

}  // namespace lcm
