#include "lcm/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

namespace {

constexpr std::int64_t kInf = -1;  // marks "no finite site"

// Rational with positive denominator.
struct Ratio {
  __int128 num;
  __int128 den;
};

bool less_equal(const Ratio& a, const Ratio& b) { return a.num * b.den <= b.num * a.den; }

// One-dimensional squared distance transform over sampled parabolas
// (Felzenszwalb & Huttenlocher) with exact rational breakpoints.
void transform_1d(const std::int64_t* f, std::int64_t* out, std::size_t n,
                  std::vector<std::int64_t>& v, std::vector<Ratio>& z) {
  v.assign(n, 0);
  z.assign(n + 1, Ratio{0, 1});
  long k = -1;
  for (std::size_t qi = 0; qi < n; ++qi) {
    if (f[qi] == kInf) continue;
    const auto q = static_cast<std::int64_t>(qi);
    if (k < 0) {
      k = 0;
      v[0] = q;
      continue;
    }
    while (true) {
      const std::int64_t p = v[static_cast<std::size_t>(k)];
      const Ratio s{static_cast<__int128>(f[qi]) + q * q - (f[static_cast<std::size_t>(p)] + p * p),
                    static_cast<__int128>(2) * (q - p)};
      if (k > 0 && less_equal(s, z[static_cast<std::size_t>(k)])) {
        --k;
        continue;
      }
      ++k;
      v[static_cast<std::size_t>(k)] = q;
      z[static_cast<std::size_t>(k)] = s;
      break;
    }
  }
  if (k < 0) {
    std::fill(out, out + n, kInf);
    return;
  }
  // z[j] for 1 <= j <= k is the left boundary of parabola j.
  long j = 0;
  for (std::size_t pi = 0; pi < n; ++pi) {
    const auto p = static_cast<std::int64_t>(pi);
    // advance while the next boundary lies strictly left of p
    while (j < k && z[static_cast<std::size_t>(j + 1)].num <
                        static_cast<__int128>(p) * z[static_cast<std::size_t>(j + 1)].den) {
      ++j;
    }
    const std::int64_t site = v[static_cast<std::size_t>(j)];
    out[pi] = (p - site) * (p - site) + f[static_cast<std::size_t>(site)];
  }
}

double ramp_up(double v, double a, double b, FuzzyShape shape) {
  if (shape == FuzzyShape::j_shaped) {
    if (v >= b) return 1.0;
    const double t = (v - b) / (b - a);
    return 1.0 / (1.0 + t * t);
  }
  if (v <= a) return 0.0;
  if (v >= b) return 1.0;
  if (shape == FuzzyShape::linear) return (v - a) / (b - a);
  const double c = std::cos(std::numbers::pi / 2.0 * (b - v) / (b - a));
  return c * c;
}

double ramp_down(double v, double a, double b, FuzzyShape shape) {
  if (shape == FuzzyShape::j_shaped) {
    if (v <= a) return 1.0;
    const double t = (v - a) / (b - a);
    return 1.0 / (1.0 + t * t);
  }
  if (v <= a) return 1.0;
  if (v >= b) return 0.0;
  if (shape == FuzzyShape::linear) return (b - v) / (b - a);
  const double c = std::cos(std::numbers::pi / 2.0 * (v - a) / (b - a));
  return c * c;
}

}  // namespace

std::vector<std::int64_t> squared_distance_cells(const BinaryMask& targets) {
  const int rows = targets.geometry().rows;
  const int cols = targets.geometry().cols;
  if (targets.count() == 0) throw DataError("distance transform: mask has no target cells");
  const auto ur = static_cast<std::size_t>(rows);
  const auto uc = static_cast<std::size_t>(cols);
  std::vector<std::int64_t> vertical(targets.size());
  std::vector<std::int64_t> column_in(ur), column_out(ur), v;
  std::vector<Ratio> z;
  for (std::size_t c = 0; c < uc; ++c) {
    for (std::size_t r = 0; r < ur; ++r) column_in[r] = targets[r * uc + c] ? 0 : kInf;
    transform_1d(column_in.data(), column_out.data(), ur, v, z);
    for (std::size_t r = 0; r < ur; ++r) vertical[r * uc + c] = column_out[r];
  }
  std::vector<std::int64_t> out(targets.size());
  for (std::size_t r = 0; r < ur; ++r) {
    transform_1d(vertical.data() + r * uc, out.data() + r * uc, uc, v, z);
  }
  return out;
}

Grid distance_transform(const BinaryMask& targets, double cell_size) {
  if (!(cell_size > 0.0)) throw DataError("distance transform: cell size must be positive");
  const auto d2 = squared_distance_cells(targets);
  std::vector<double> out(d2.size());
  for (std::size_t i = 0; i < d2.size(); ++i) {
    out[i] = std::sqrt(static_cast<double>(d2[i])) * cell_size;
  }
  GridGeometry geo = targets.geometry();
  return Grid(geo, std::move(out));
}

Grid distance_transform(const BinaryMask& targets) {
  return distance_transform(targets, targets.geometry().cell_size);
}

void validate_fuzzy_spec(const FuzzySpec& spec) {
  const auto& p = spec.points;
  if (spec.direction == FuzzyDirection::symmetric) {
    if (!(p[0] <= p[1] && p[1] <= p[2] && p[2] <= p[3])) {
      throw ConfigError("symmetric fuzzy control points must satisfy a <= b <= c <= d");
    }
    if (p[0] == p[1] || p[2] == p[3]) {
      throw ConfigError("fuzzy ramp control points must differ (a < b, c < d)");
    }
    return;
  }
  if (!(p[0] <= p[1])) throw ConfigError("fuzzy control points must satisfy a <= b");
  if (p[0] == p[1]) throw ConfigError("fuzzy ramp control points must differ (a < b)");
}

FuzzySpec parse_fuzzy_spec(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4 && parts.size() != 6) {
    throw ConfigError("fuzzy spec '" + text + "' must be shape,direction,a,b[,c,d]");
  }
  FuzzySpec spec;
  if (parts[0] == "linear") spec.shape = FuzzyShape::linear;
  else if (parts[0] == "sigmoidal") spec.shape = FuzzyShape::sigmoidal;
  else if (parts[0] == "j_shaped") spec.shape = FuzzyShape::j_shaped;
  else throw ConfigError("unknown fuzzy shape '" + parts[0] + "'");
  if (parts[1] == "increasing") spec.direction = FuzzyDirection::increasing;
  else if (parts[1] == "decreasing") spec.direction = FuzzyDirection::decreasing;
  else if (parts[1] == "symmetric") spec.direction = FuzzyDirection::symmetric;
  else throw ConfigError("unknown fuzzy direction '" + parts[1] + "'");
  const bool symmetric = spec.direction == FuzzyDirection::symmetric;
  if (symmetric != (parts.size() == 6)) {
    throw ConfigError("fuzzy spec '" + text + "': symmetric takes 4 points, others take 2");
  }
  try {
    for (std::size_t i = 2; i < parts.size(); ++i) {
      spec.points[i - 2] = parse_number(parts[i], "fuzzy spec");
    }
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  validate_fuzzy_spec(spec);
  return spec;
}

std::string to_string(const FuzzySpec& spec) {
  static constexpr const char* kShapes[] = {"linear", "sigmoidal", "j_shaped"};
  static constexpr const char* kDirs[] = {"increasing", "decreasing", "symmetric"};
  std::string out = std::string(kShapes[static_cast<int>(spec.shape)]) + "," +
                    kDirs[static_cast<int>(spec.direction)];
  const std::size_t n = spec.direction == FuzzyDirection::symmetric ? 4 : 2;
  for (std::size_t i = 0; i < n; ++i) out += "," + format_number(spec.points[i]);
  return out;
}

double fuzzy_membership(double v, const FuzzySpec& spec) {
  const auto& p = spec.points;
  switch (spec.direction) {
    case FuzzyDirection::increasing:
      return ramp_up(v, p[0], p[1], spec.shape);
    case FuzzyDirection::decreasing:
      return ramp_down(v, p[0], p[1], spec.shape);
    case FuzzyDirection::symmetric:
      if (v < p[1]) return ramp_up(v, p[0], p[1], spec.shape);
      if (v <= p[2]) return 1.0;
      return ramp_down(v, p[2], p[3], spec.shape);
  }
  return 0.0;
}

Grid fuzzy_standardize(const Grid& grid, const FuzzySpec& spec) {
  validate_fuzzy_spec(spec);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = grid.is_valid(i) ? std::round(255.0 * fuzzy_membership(grid[i], spec)) : grid.nodata();
  }
  return Grid(grid.geometry(), std::move(out));
}

Grid reclass(const Grid& grid, const std::vector<ReclassRule>& table) {
  std::vector<ReclassRule> sorted = table;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.from_min < b.from_min; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].from_min < sorted[i].from_max)) {
      throw ConfigError("reclass interval [" + format_number(sorted[i].from_min) + ", " +
                        format_number(sorted[i].from_max) + ") is empty");
    }
    if (i > 0 && sorted[i].from_min < sorted[i - 1].from_max) {
      throw ConfigError("reclass intervals overlap at " + format_number(sorted[i].from_min));
    }
  }
  std::vector<double> out(grid.size(), grid.nodata());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.is_valid(i)) continue;
    const double v = grid[i];
    auto it = std::upper_bound(sorted.begin(), sorted.end(), v,
                               [](double x, const ReclassRule& r) { return x < r.from_min; });
    if (it == sorted.begin()) continue;
    --it;
    if (v < it->from_max) out[i] = it->to_value;
  }
  return Grid(grid.geometry(), std::move(out));
}

std::vector<ReclassRule> parse_reclass_table(const std::string& text) {
  std::vector<ReclassRule> rules;
  for (const auto& entry : split(text, ';')) {
    if (entry.empty()) continue;
    const auto f = split(entry, ':');
    if (f.size() != 3) throw ConfigError("reclass rule '" + entry + "' must be min:max:value");
    try {
      rules.push_back({parse_number(f[0], "reclass"), parse_number(f[1], "reclass"),
                       parse_number(f[2], "reclass")});
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  if (rules.empty()) throw ConfigError("reclass table is empty");
  return rules;
}

ConstraintPredicate parse_constraint_predicate(const std::string& text) {
  const std::string t = trim(text);
  try {
    if (t.rfind("in:", 0) == 0) {
      CategorySet set;
      for (const auto& f : split(t.substr(3), ',')) {
        if (!f.empty()) set.categories.insert(parse_int(f, "constraint category"));
      }
      if (set.categories.empty()) throw ConfigError("constraint category set is empty");
      return set;
    }
    struct Op {
      const char* text;
      Comparison op;
    };
    static constexpr Op kOps[] = {{">=", Comparison::greater_equal},
                                  {"<=", Comparison::less_equal},
                                  {">", Comparison::greater},
                                  {"<", Comparison::less}};
    for (const auto& op : kOps) {
      const std::string prefix = op.text;
      if (t.rfind(prefix, 0) == 0) {
        return Threshold{op.op, parse_number(t.substr(prefix.size()), "constraint threshold")};
      }
    }
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("constraint predicate '" + text + "' must be >=v, >v, <=v, <v or in:a,b");
}

BinaryMask make_constraint(const Grid& grid, const ConstraintPredicate& predicate) {
  if (const auto* set = std::get_if<CategorySet>(&predicate); set && set->categories.empty()) {
    throw ConfigError("constraint category set is empty");
  }
  std::vector<std::uint8_t> out(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.is_valid(i)) continue;
    const double v = grid[i];
    bool holds = false;
    if (const auto* th = std::get_if<Threshold>(&predicate)) {
      switch (th->op) {
        case Comparison::less: holds = v < th->value; break;
        case Comparison::less_equal: holds = v <= th->value; break;
        case Comparison::greater: holds = v > th->value; break;
        case Comparison::greater_equal: holds = v >= th->value; break;
      }
    } else {
      const auto& cats = std::get<CategorySet>(predicate).categories;
      holds = v == std::floor(v) && cats.count(static_cast<int>(v)) > 0;
    }
    out[i] = holds ? 1 : 0;
  }
  return BinaryMask(grid.geometry(), std::move(out));
}

}  // namespace lcm
