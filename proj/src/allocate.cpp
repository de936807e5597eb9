#include "lcm/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "lcm/error.hpp"

namespace lcm {

namespace {

// Allocates `pixels` (ascending cell indices) among classes. suit[c][cell] gives class c's
// suitability; returns the winning class position for each entry of `pixels`.
std::vector<int> allocate_pixels(const std::vector<std::size_t>& pixels,
                                 const std::vector<const double*>& suit,
                                 std::vector<std::int64_t> remaining) {
  const std::size_t np = pixels.size();
  const std::size_t nc = suit.size();
  std::vector<std::vector<std::uint32_t>> order(nc);
  std::vector<std::vector<std::uint32_t>> rank(nc, std::vector<std::uint32_t>(np));
  for (std::size_t c = 0; c < nc; ++c) {
    if (remaining[c] == 0) continue;
    auto& o = order[c];
    o.resize(np);
    std::iota(o.begin(), o.end(), 0u);
    const double* s = suit[c];
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
      return s[pixels[a]] > s[pixels[b]];
    });
    for (std::uint32_t r = 0; r < np; ++r) rank[c][o[r]] = r;
  }

  std::vector<int> owner(np, -1);
  std::vector<int> claimant(np, -1);
  std::vector<std::size_t> cursor(nc, 0);
  std::vector<std::uint32_t> claimed;
  std::int64_t open = std::accumulate(remaining.begin(), remaining.end(), std::int64_t{0});
  while (open > 0) {
    claimed.clear();
    for (std::size_t c = 0; c < nc; ++c) {
      if (remaining[c] == 0) continue;
      auto& o = order[c];
      while (cursor[c] < np && owner[o[cursor[c]]] >= 0) ++cursor[c];
      std::int64_t want = remaining[c];
      for (std::size_t k = cursor[c]; k < np && want > 0; ++k) {
        const std::uint32_t p = o[k];
        if (owner[p] >= 0) continue;
        --want;
        const int prev = claimant[p];
        if (prev < 0) {
          claimant[p] = static_cast<int>(c);
          claimed.push_back(p);
        } else if (rank[c][p] < rank[static_cast<std::size_t>(prev)][p]) {
          claimant[p] = static_cast<int>(c);
        }
      }
    }
    if (claimed.empty()) throw NumericalError("allocation stalled with unmet targets");
    for (std::uint32_t p : claimed) {
      const int c = claimant[p];
      owner[p] = c;
      claimant[p] = -1;
      --remaining[static_cast<std::size_t>(c)];
      --open;
    }
  }
  return owner;
}

std::vector<std::int64_t> class_counts_vector(const LandCoverMap& map,
                                              const std::vector<int>& ids) {
  std::vector<std::int64_t> counts(ids.size(), 0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.is_valid(i)) continue;
    const auto it = std::lower_bound(ids.begin(), ids.end(), map.class_at(i));
    if (it == ids.end() || *it != map.class_at(i)) {
      throw DataError("class " + std::to_string(map.class_at(i)) + " has no transition row");
    }
    ++counts[static_cast<std::size_t>(it - ids.begin())];
  }
  return counts;
}

}  // namespace

Grid rank_suitability(const Grid& suitability, const BinaryMask* constraint) {
  if (constraint) {
    require_same_frame(suitability.geometry(), constraint->geometry(), "rank constraint");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < suitability.size(); ++i) {
    if (suitability.is_valid(i) && (!constraint || (*constraint)[i])) eligible.push_back(i);
  }
  if (eligible.empty()) throw DataError("rank_suitability: no eligible pixels");
  std::stable_sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
    return suitability[a] > suitability[b];
  });
  std::vector<double> out(suitability.size(), suitability.nodata());
  for (std::size_t r = 0; r < eligible.size(); ++r) out[eligible[r]] = static_cast<double>(r);
  return Grid(suitability.geometry(), std::move(out));
}

LandCoverMap mola(const std::vector<Grid>& suitabilities, const AllocationTargets& targets,
                  const Legend& legend, const BinaryMask* eligible) {
  const std::size_t nc = suitabilities.size();
  if (nc == 0) throw DataError("mola: no suitability grids");
  if (targets.class_ids.size() != nc || targets.counts.size() != nc) {
    throw DataError("mola: one target and one suitability grid per class required");
  }
  const GridGeometry geo = suitabilities[0].geometry();
  for (std::size_t c = 1; c < nc; ++c) {
    require_same_frame(geo, suitabilities[c].geometry(), "suitability grids");
  }
  if (eligible) require_same_frame(geo, eligible->geometry(), "mola eligibility mask");
  for (int id : targets.class_ids) {
    if (legend.count(id) == 0) throw DataError("mola: class " + std::to_string(id) + " not in legend");
  }
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (eligible && !(*eligible)[i]) continue;
    bool valid = true;
    for (const auto& s : suitabilities) valid = valid && s.is_valid(i);
    if (valid) pixels.push_back(i);
  }
  std::int64_t demand = 0;
  for (auto t : targets.counts) {
    if (t < 0) throw DataError("mola: negative target");
    demand += t;
  }
  if (demand != static_cast<std::int64_t>(pixels.size())) {
    throw DataError("mola: infeasible targets (" + std::to_string(demand) + " requested, " +
                    std::to_string(pixels.size()) + " eligible pixels)");
  }
  std::vector<const double*> suit;
  for (const auto& s : suitabilities) suit.push_back(s.values().data());
  const auto owner = allocate_pixels(pixels, suit, targets.counts);
  std::vector<double> out(geo.size(), geo.nodata);
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    out[pixels[k]] = targets.class_ids[static_cast<std::size_t>(owner[k])];
  }
  return LandCoverMap(Grid(geo, std::move(out)), legend, "allocated");
}

Grid contiguity_filter(const LandCoverMap& current, int class_id, int kernel_size) {
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw DataError("contiguity kernel size must be odd and at least 3");
  }
  const int rows = current.geometry().rows;
  const int cols = current.geometry().cols;
  const int half = kernel_size / 2;
  // Summed-area tables of valid pixels and class pixels.
  const auto w = static_cast<std::size_t>(cols + 1);
  std::vector<std::int32_t> valid_sat(static_cast<std::size_t>(rows + 1) * w, 0);
  std::vector<std::int32_t> class_sat(valid_sat.size(), 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      const int v = current.is_valid(i) ? 1 : 0;
      const int k = (v && current.class_at(i) == class_id) ? 1 : 0;
      const std::size_t s = static_cast<std::size_t>(r + 1) * w + (c + 1);
      valid_sat[s] = v + valid_sat[s - 1] + valid_sat[s - w] - valid_sat[s - w - 1];
      class_sat[s] = k + class_sat[s - 1] + class_sat[s - w] - class_sat[s - w - 1];
    }
  }
  const auto box = [&](const std::vector<std::int32_t>& sat, int r0, int c0, int r1, int c1) {
    return sat[static_cast<std::size_t>(r1) * w + c1] - sat[static_cast<std::size_t>(r0) * w + c1] -
           sat[static_cast<std::size_t>(r1) * w + c0] + sat[static_cast<std::size_t>(r0) * w + c0];
  };
  const GridGeometry geo = current.geometry();
  std::vector<double> out(geo.size(), geo.nodata);
  for (int r = 0; r < rows; ++r) {
    const int r0 = std::max(0, r - half), r1 = std::min(rows, r + half + 1);
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (!current.is_valid(i)) continue;
      const int c0 = std::max(0, c - half), c1 = std::min(cols, c + half + 1);
      const int self_class = current.class_at(i) == class_id ? 1 : 0;
      const int valid = box(valid_sat, r0, c0, r1, c1) - 1;
      const int same = box(class_sat, r0, c0, r1, c1) - self_class;
      out[i] = valid > 0 ? static_cast<double>(same) / static_cast<double>(valid) : 0.0;
    }
  }
  return Grid(geo, std::move(out));
}

std::vector<std::int64_t> controlled_rounding(const ExpectedTransitions& expected,
                                              const std::vector<std::int64_t>& row_totals,
                                              const std::vector<std::int64_t>& column_totals) {
  const std::size_t n = expected.order();
  if (row_totals.size() != n || column_totals.size() != n) {
    throw DataError("controlled rounding: margin sizes differ from the table order");
  }
  std::vector<std::int64_t> out(n * n);
  std::vector<double> frac(n * n);
  std::vector<std::int64_t> row_need(row_totals), col_need(column_totals);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = std::max(0.0, expected.at(i, j));
      const double f = std::floor(v);
      out[i * n + j] = static_cast<std::int64_t>(f);
      frac[i * n + j] = v - f;
      row_need[i] -= out[i * n + j];
      col_need[j] -= out[i * n + j];
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (row_need[k] < 0 || col_need[k] < 0) {
      throw NumericalError("controlled rounding: margins below the floored table");
    }
  }
  // Greedy pass on the largest fractional parts, then augmenting paths for what is left.
  std::vector<std::size_t> cells(n * n);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::stable_sort(cells.begin(), cells.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  std::vector<std::uint8_t> bumped(n * n, 0);
  for (std::size_t cell : cells) {
    const std::size_t i = cell / n, j = cell % n;
    if (frac[cell] > 0.0 && row_need[i] > 0 && col_need[j] > 0) {
      bumped[cell] = 1;
      --row_need[i];
      --col_need[j];
    }
  }
  while (std::accumulate(row_need.begin(), row_need.end(), std::int64_t{0}) > 0) {
    // BFS over rows (0..n-1) and columns (n..2n-1) in the residual graph.
    std::vector<int> parent(2 * n, -2);
    std::queue<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
      if (row_need[i] > 0) {
        parent[i] = -1;
        queue.push(i);
      }
    }
    std::size_t end = 2 * n;
    while (!queue.empty() && end == 2 * n) {
      const std::size_t u = queue.front();
      queue.pop();
      if (u < n) {
        for (std::size_t j = 0; j < n; ++j) {
          if (!bumped[u * n + j] && parent[n + j] == -2) {
            parent[n + j] = static_cast<int>(u);
            if (col_need[j] > 0) {
              end = n + j;
              break;
            }
            queue.push(n + j);
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (bumped[i * n + j] && parent[i] == -2) {
            parent[i] = static_cast<int>(u);
            queue.push(i);
          }
        }
      }
    }
    if (end == 2 * n) throw NumericalError("controlled rounding: margins are inconsistent");
    std::size_t v = end;
    --col_need[end - n];
    while (true) {
      const int p = parent[v];
      if (v >= n) {
        const auto i = static_cast<std::size_t>(p);
        bumped[i * n + (v - n)] = 1;
        v = i;
      } else {
        if (p == -1) {
          --row_need[v];
          break;
        }
        const std::size_t j = static_cast<std::size_t>(p) - n;
        bumped[v * n + j] = 0;
        v = static_cast<std::size_t>(p);
      }
    }
  }
  for (std::size_t cell = 0; cell < n * n; ++cell) out[cell] += bumped[cell];
  return out;
}

CaResult ca_markov(const LandCoverMap& current, const ExpectedTransitions& transitions,
                   const std::vector<Grid>& suitabilities, const CaParams& params) {
  const std::size_t n = transitions.order();
  const auto& ids = transitions.class_ids;
  if (suitabilities.size() != n) {
    throw DataError("ca_markov: " + std::to_string(suitabilities.size()) +
                    " suitability grids for " + std::to_string(n) + " classes");
  }
  for (const auto& s : suitabilities) {
    require_same_frame(current.geometry(), s.geometry(), "suitability vs base map");
  }
  if (params.iterations < 1) throw DataError("ca_markov: iterations must be positive");
  if (params.kernel_size < 3 || params.kernel_size % 2 == 0) {
    throw DataError("ca_markov: kernel size must be odd and at least 3");
  }
  std::vector<double> fractions = params.fractions;
  if (fractions.empty()) {
    for (int k = 1; k <= params.iterations; ++k) {
      fractions.push_back(static_cast<double>(k) / static_cast<double>(params.iterations));
    }
  }
  if (static_cast<int>(fractions.size()) != params.iterations || fractions.back() != 1.0) {
    throw DataError("ca_markov: one cumulative fraction per iteration, ending at 1");
  }
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    if (!(fractions[k] > (k == 0 ? 0.0 : fractions[k - 1]))) {
      throw DataError("ca_markov: cumulative fractions must increase strictly");
    }
  }

  const auto base_counts = class_counts_vector(current, ids);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += transitions.at(i, j);
    if (std::abs(row - static_cast<double>(base_counts[i])) > 1e-6 * std::max(1.0, row)) {
      throw DataError("ca_markov: expected transitions of class " + std::to_string(ids[i]) +
                      " do not match its pixel count in the base map");
    }
  }
  const auto total = std::accumulate(base_counts.begin(), base_counts.end(), std::int64_t{0});
  std::vector<double> column(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) column[j] += transitions.at(i, j);
  }
  const auto final_targets = largest_remainder(column, total);
  const auto final_table = controlled_rounding(transitions, base_counts, final_targets);

  // Host pixel lists from the base map.
  const GridGeometry geo = current.geometry();
  std::vector<std::vector<std::size_t>> hosts(n);
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (!current.is_valid(i)) continue;
    const auto k = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), current.class_at(i)) - ids.begin());
    hosts[k].push_back(i);
  }

  CaResult result;
  result.class_ids = ids;
  LandCoverMap state = current;
  std::vector<std::vector<double>> effective(n, std::vector<double>(geo.size(), 0.0));
  for (int it = 0; it < params.iterations; ++it) {
    const double f = fractions[static_cast<std::size_t>(it)];
    for (std::size_t c = 0; c < n; ++c) {
      const Grid weight = params.contiguity == ContiguityMode::filter
                              ? contiguity_filter(state, ids[c], params.kernel_size)
                              : Grid::filled(geo, 1.0);
      const Grid& s = suitabilities[c];
      for (std::size_t i = 0; i < geo.size(); ++i) {
        const double base = s.is_valid(i) ? s[i] : 0.0;
        const double w = weight.is_valid(i) ? weight[i] : 0.0;
        effective[c][i] = base * (params.contiguity_floor + w);
      }
    }
    std::vector<const double*> suit;
    for (const auto& e : effective) suit.push_back(e.data());

    std::vector<double> labels(geo.size(), geo.nodata);
    std::vector<std::int64_t> step_targets(n, 0);
    for (std::size_t h = 0; h < n; ++h) {
      if (hosts[h].empty()) continue;
      std::vector<double> share(n);
      double moved = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == h) continue;
        share[j] = f * static_cast<double>(final_table[h * n + j]);
        moved += share[j];
      }
      share[h] = std::max(0.0, static_cast<double>(base_counts[h]) - moved);
      const auto host_targets = largest_remainder(share, base_counts[h]);
      for (std::size_t j = 0; j < n; ++j) step_targets[j] += host_targets[j];
      const auto owner = allocate_pixels(hosts[h], suit, host_targets);
      for (std::size_t k = 0; k < hosts[h].size(); ++k) {
        labels[hosts[h][k]] = ids[static_cast<std::size_t>(owner[k])];
      }
    }
    state = LandCoverMap(Grid(geo, std::move(labels)), current.legend(), current.date_tag());
    if (params.keep_stages) result.stages.push_back(state);
    const auto counts = class_counts_vector(state, ids);
    for (std::size_t c = 0; c < n; ++c) {
      result.log.push_back({it + 1, ids[c], counts[c], step_targets[c]});
    }
  }
  result.map = std::move(state);
  result.transitions = final_table;
  return result;
}

CaResult ca_markov(const LandCoverMap& current, const TransitionMatrix& tm,
                   const std::vector<Grid>& suitabilities, const CaParams& params) {
  return ca_markov(current, expected_transitions(current, tm), suitabilities, params);
}

double clumping_index(const LandCoverMap& map) {
  const int rows = map.geometry().rows, cols = map.geometry().cols;
  double sum = 0.0;
  std::int64_t n = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (!map.is_valid(i)) continue;
      int valid = 0, same = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * cols + cc;
          if (!map.is_valid(j)) continue;
          ++valid;
          same += map.class_at(j) == map.class_at(i) ? 1 : 0;
        }
      }
      if (valid == 0) continue;
      sum += static_cast<double>(same) / valid;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::string format_change_log_csv(const std::vector<ChangeLogEntry>& log) {
  std::string out = "iteration,class,allocated,target\n";
  for (const auto& e : log) {
    out += std::to_string(e.iteration) + "," + std::to_string(e.class_id) + "," +
           std::to_string(e.allocated) + "," + std::to_string(e.target) + "\n";
  }
  return out;
}

}  // namespace lcm
