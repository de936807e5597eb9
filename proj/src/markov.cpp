#include "lcm/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

namespace {

std::vector<int> shared_class_ids(const LandCoverMap& a, const LandCoverMap& b) {
  const auto ia = a.class_ids();
  const auto ib = b.class_ids();
  if (ia != ib) {
    throw DataError("legend mismatch between maps '" + a.date_tag() + "' and '" + b.date_tag() +
                    "'");
  }
  return ia;
}

std::size_t slot(const std::vector<int>& ids, int id) {
  return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
}

void require_stochastic(const TransitionMatrix& tm) {
  const std::size_t n = tm.order();
  if (tm.probs.size() != n * n) throw DataError("transition matrix has the wrong size");
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = tm.at(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DataError("transition probability outside [0, 1] in row " + std::to_string(i));
      }
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw DataError("transition matrix row " + std::to_string(tm.class_ids[i]) +
                      " does not sum to 1");
    }
  }
}

void require_known_classes(const LandCoverMap& map, const std::vector<int>& ids,
                           const std::string& what) {
  for (int id : map.class_ids()) {
    const std::size_t k = slot(ids, id);
    if (k >= ids.size() || ids[k] != id) {
      throw DataError("class " + std::to_string(id) + " of map '" + map.date_tag() +
                      "' is absent from the " + what);
    }
  }
}

}  // namespace

std::int64_t CountMatrix::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::size_t TransitionMatrix::index_of(int class_id) const {
  const std::size_t k = slot(class_ids, class_id);
  if (k >= class_ids.size() || class_ids[k] != class_id) {
    throw DataError("class " + std::to_string(class_id) + " is absent from the transition matrix");
  }
  return k;
}

CountMatrix crosstab(const LandCoverMap& earlier, const LandCoverMap& later,
                     const BinaryMask* mask) {
  require_same_frame(earlier.geometry(), later.geometry(), "cross-tabulated maps");
  if (mask) require_same_frame(earlier.geometry(), mask->geometry(), "cross-tabulation mask");
  CountMatrix cm;
  cm.class_ids = shared_class_ids(earlier, later);
  const std::size_t n = cm.order();
  cm.counts.assign(n * n, 0);
  for (std::size_t i = 0; i < earlier.size(); ++i) {
    if (!earlier.is_valid(i) || !later.is_valid(i) || (mask && !(*mask)[i])) continue;
    ++cm.counts[slot(cm.class_ids, earlier.class_at(i)) * n + slot(cm.class_ids, later.class_at(i))];
  }
  if (cm.total() == 0) throw DataError("cross-tabulation: no jointly valid pixels");
  return cm;
}

TransitionMatrix transition_probabilities(const CountMatrix& counts, double time_span) {
  if (!(time_span > 0.0)) throw DataError("transition time span must be positive");
  const std::size_t n = counts.order();
  if (counts.counts.size() != n * n) throw DataError("count matrix must be square");
  TransitionMatrix tm;
  tm.class_ids = counts.class_ids;
  tm.time_span = time_span;
  tm.counts = counts.counts;
  tm.probs.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (counts.at(i, j) < 0) throw DataError("negative transition count");
      row += counts.at(i, j);
    }
    if (row == 0) {
      tm.probs[i * n + i] = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      tm.probs[i * n + j] = static_cast<double>(counts.at(i, j)) / static_cast<double>(row);
    }
  }
  return tm;
}

TransitionMatrix scale_transition(const TransitionMatrix& tm, double target_span) {
  if (!(target_span > 0.0)) throw DataError("target time span must be positive");
  require_stochastic(tm);
  const double ratio = target_span / tm.time_span;
  const std::size_t n = tm.order();
  TransitionMatrix out = tm;
  out.time_span = target_span;
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = tm.at(i, j) * ratio;
      if (p > 1.0) {
        throw NumericalError("rescaling transition " + std::to_string(tm.class_ids[i]) + "->" +
                             std::to_string(tm.class_ids[j]) + " to span " +
                             format_number(target_span) +
                             " exceeds probability 1; split the projection into shorter steps");
      }
      out.probs[i * n + j] = p;
      off += p;
    }
    if (off > 1.0) {
      double clamped = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        out.probs[i * n + j] /= off;
        clamped += out.probs[i * n + j];
      }
      off = clamped;
    }
    out.probs[i * n + i] = std::max(0.0, 1.0 - off);
  }
  return out;
}

SecondOrderTable second_order_transitions(const LandCoverMap& m1, const LandCoverMap& m2,
                                          const LandCoverMap& m3) {
  require_same_frame(m1.geometry(), m2.geometry(), "second-order maps 1 and 2");
  require_same_frame(m1.geometry(), m3.geometry(), "second-order maps 1 and 3");
  SecondOrderTable t;
  t.class_ids = shared_class_ids(m1, m2);
  if (m3.class_ids() != t.class_ids) throw DataError("legend mismatch in second-order maps");
  t.first_order = transition_probabilities(crosstab(m2, m3), 1.0);
  const std::size_t n = t.order();
  std::vector<std::int64_t> triple(n * n * n, 0);
  t.support.assign(n * n, 0);
  for (std::size_t i = 0; i < m1.size(); ++i) {
    if (!m1.is_valid(i) || !m2.is_valid(i) || !m3.is_valid(i)) continue;
    const std::size_t a = slot(t.class_ids, m1.class_at(i));
    const std::size_t b = slot(t.class_ids, m2.class_at(i));
    const std::size_t c = slot(t.class_ids, m3.class_at(i));
    ++triple[(a * n + b) * n + c];
    ++t.support[a * n + b];
  }
  t.probs.assign(n * n * n, 0.0);
  t.fallback.assign(n * n, false);
  for (std::size_t pair = 0; pair < n * n; ++pair) {
    const std::size_t curr = pair % n;
    if (t.support[pair] == 0) {
      t.fallback[pair] = true;
      for (std::size_t k = 0; k < n; ++k) t.probs[pair * n + k] = t.first_order.at(curr, k);
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) {
      t.probs[pair * n + k] =
          static_cast<double>(triple[pair * n + k]) / static_cast<double>(t.support[pair]);
    }
  }
  return t;
}

std::vector<Grid> conditional_probability_maps(const LandCoverMap& current,
                                               const TransitionMatrix& tm) {
  require_stochastic(tm);
  require_known_classes(current, tm.class_ids, "transition matrix");
  const std::size_t n = tm.order();
  const GridGeometry geo = current.geometry();
  std::vector<std::vector<double>> maps(n, std::vector<double>(geo.size(), geo.nodata));
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (!current.is_valid(i)) continue;
    const std::size_t from = tm.index_of(current.class_at(i));
    for (std::size_t j = 0; j < n; ++j) maps[j][i] = tm.at(from, j);
  }
  std::vector<Grid> out;
  for (auto& m : maps) out.emplace_back(geo, std::move(m));
  return out;
}

std::vector<Grid> conditional_probability_maps(const LandCoverMap& previous,
                                               const LandCoverMap& current,
                                               const SecondOrderTable& table) {
  require_same_frame(previous.geometry(), current.geometry(), "previous vs current map");
  require_known_classes(previous, table.class_ids, "second-order table");
  require_known_classes(current, table.class_ids, "second-order table");
  const std::size_t n = table.order();
  const GridGeometry geo = current.geometry();
  std::vector<std::vector<double>> maps(n, std::vector<double>(geo.size(), geo.nodata));
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (!current.is_valid(i) || !previous.is_valid(i)) continue;
    const std::size_t a = slot(table.class_ids, previous.class_at(i));
    const std::size_t b = slot(table.class_ids, current.class_at(i));
    for (std::size_t j = 0; j < n; ++j) maps[j][i] = table.at(a, b, j);
  }
  std::vector<Grid> out;
  for (auto& m : maps) out.emplace_back(geo, std::move(m));
  return out;
}

ExpectedTransitions expected_transitions(const LandCoverMap& current, const TransitionMatrix& tm) {
  require_stochastic(tm);
  require_known_classes(current, tm.class_ids, "transition matrix");
  const std::size_t n = tm.order();
  ExpectedTransitions et{tm.class_ids, std::vector<double>(n * n, 0.0)};
  std::vector<std::int64_t> counts(n, 0);
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current.is_valid(i)) ++counts[tm.index_of(current.class_at(i))];
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      et.values[a * n + b] = static_cast<double>(counts[a]) * tm.at(a, b);
    }
  }
  return et;
}

ExpectedTransitions expected_transitions(const LandCoverMap& previous, const LandCoverMap& current,
                                         const SecondOrderTable& table) {
  require_same_frame(previous.geometry(), current.geometry(), "previous vs current map");
  require_known_classes(previous, table.class_ids, "second-order table");
  require_known_classes(current, table.class_ids, "second-order table");
  const std::size_t n = table.order();
  std::vector<std::int64_t> pairs(n * n, 0);
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (!current.is_valid(i)) continue;
    if (!previous.is_valid(i)) {
      throw DataError("pixel " + std::to_string(i) +
                      " is valid in the current map but has no previous class");
    }
    ++pairs[slot(table.class_ids, previous.class_at(i)) * n +
            slot(table.class_ids, current.class_at(i))];
  }
  ExpectedTransitions et{table.class_ids, std::vector<double>(n * n, 0.0)};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        et.values[b * n + c] += static_cast<double>(pairs[a * n + b]) * table.at(a, b, c);
      }
    }
  }
  return et;
}

std::vector<std::int64_t> largest_remainder(std::span<const double> values, std::int64_t total) {
  std::vector<std::int64_t> out(values.size());
  std::vector<double> frac(values.size());
  std::int64_t assigned = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] >= 0.0)) throw NumericalError("largest remainder: negative value");
    const double f = std::floor(values[k]);
    out[k] = static_cast<std::int64_t>(f);
    frac[k] = values[k] - f;
    assigned += out[k];
  }
  std::int64_t remaining = total - assigned;
  if (remaining < 0 || remaining > static_cast<std::int64_t>(values.size())) {
    throw NumericalError("largest remainder: values sum to " + std::to_string(assigned) +
                         " but the total is " + std::to_string(total));
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; remaining > 0; ++k, --remaining) ++out[order[k]];
  return out;
}

ExpectedAreas expected_areas(const ExpectedTransitions& et) {
  const std::size_t n = et.order();
  ExpectedAreas areas;
  areas.class_ids = et.class_ids;
  areas.current.assign(n, 0);
  areas.expected.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      areas.expected[b] += et.at(a, b);
      row += et.at(a, b);
    }
    areas.current[a] = static_cast<std::int64_t>(std::llround(row));
    total += row;
  }
  areas.allocated = largest_remainder(areas.expected, std::llround(total));
  return areas;
}

ExpectedAreas expected_areas(const LandCoverMap& current, const TransitionMatrix& tm) {
  return expected_areas(expected_transitions(current, tm));
}

std::string format_transition_csv(const TransitionMatrix& tm) {
  std::string out = "# time_span=" + format_number(tm.time_span) + "\nfrom";
  for (int id : tm.class_ids) out += "," + std::to_string(id);
  out += "\n";
  for (std::size_t i = 0; i < tm.order(); ++i) {
    out += std::to_string(tm.class_ids[i]);
    for (std::size_t j = 0; j < tm.order(); ++j) out += "," + format_number(tm.at(i, j));
    out += "\n";
  }
  return out;
}

TransitionMatrix read_transition_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  TransitionMatrix tm;
  bool have_span = false;
  for (const auto& c : t.comments) {
    if (c.rfind("time_span=", 0) == 0) {
      tm.time_span = parse_number(c.substr(10), path.string() + " time_span");
      have_span = true;
    }
  }
  if (!have_span) throw DataError(path.string() + ": missing '# time_span=' line");
  if (t.header.empty() || t.header[0] != "from") {
    throw DataError(path.string() + ": transition header must start with 'from'");
  }
  for (std::size_t k = 1; k < t.header.size(); ++k) {
    tm.class_ids.push_back(parse_int(t.header[k], path.string() + " header"));
  }
  const std::size_t n = tm.class_ids.size();
  if (t.rows.size() != n) throw DataError(path.string() + ": transition matrix must be square");
  tm.probs.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string ctx = path.string() + ":" + std::to_string(t.line_numbers[i]);
    if (parse_int(t.rows[i][0], ctx) != tm.class_ids[i]) {
      throw DataError(ctx + ": row class ids must follow the header order");
    }
    for (std::size_t j = 0; j < n; ++j) tm.probs[i * n + j] = parse_number(t.rows[i][j + 1], ctx);
  }
  require_stochastic(tm);
  return tm;
}

std::string format_counts_csv(const CountMatrix& counts) {
  std::string out = "from";
  for (int id : counts.class_ids) out += "," + std::to_string(id);
  out += "\n";
  for (std::size_t i = 0; i < counts.order(); ++i) {
    out += std::to_string(counts.class_ids[i]);
    for (std::size_t j = 0; j < counts.order(); ++j) out += "," + std::to_string(counts.at(i, j));
    out += "\n";
  }
  return out;
}

std::string format_second_order_csv(const SecondOrderTable& table) {
  std::string out = "prev,curr";
  for (int id : table.class_ids) out += ",p_" + std::to_string(id);
  out += ",support,fallback\n";
  const std::size_t n = table.order();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      out += std::to_string(table.class_ids[a]) + "," + std::to_string(table.class_ids[b]);
      for (std::size_t c = 0; c < n; ++c) out += "," + format_number(table.at(a, b, c));
      out += "," + std::to_string(table.support[a * n + b]) + "," +
             (table.is_fallback(a, b) ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string format_expected_areas_csv(const ExpectedAreas& areas) {
  std::string out = "class_id,current,expected,allocated\n";
  for (std::size_t k = 0; k < areas.class_ids.size(); ++k) {
    out += std::to_string(areas.class_ids[k]) + "," + std::to_string(areas.current[k]) + "," +
           format_number(areas.expected[k]) + "," + std::to_string(areas.allocated[k]) + "\n";
  }
  return out;
}

}  // namespace lcm
