#include "lcm/mce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/kernels.hpp"

namespace lcm {

namespace {

double parse_ratio(const std::string& token, const std::string& context) {
  const auto slash = token.find('/');
  if (slash == std::string::npos) return parse_number(token, context);
  const double num = parse_number(token.substr(0, slash), context);
  const double den = parse_number(token.substr(slash + 1), context);
  if (den == 0.0) throw DataError(context + ": division by zero in '" + token + "'");
  return num / den;
}

void check_factor_stack(std::span<const Grid> factors, std::size_t weight_count,
                        std::span<const BinaryMask> constraints) {
  if (factors.empty()) throw DataError("MCE needs at least one factor");
  if (factors.size() != weight_count) {
    throw DataError("MCE: " + std::to_string(factors.size()) + " factors but " +
                    std::to_string(weight_count) + " weights");
  }
  for (std::size_t k = 1; k < factors.size(); ++k) {
    require_same_frame(factors[0].geometry(), factors[k].geometry(),
                       "factor " + std::to_string(k) + " vs factor 0");
  }
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    require_same_frame(factors[0].geometry(), constraints[k].geometry(),
                       "constraint " + std::to_string(k) + " vs factor 0");
  }
}

bool constrained_out(std::span<const BinaryMask> constraints, std::size_t i) {
  for (const auto& c : constraints) {
    if (!c[i]) return true;
  }
  return false;
}

}  // namespace

SaatyMatrix::SaatyMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  const Eigen::Index n = m_.rows();
  if (n < 1 || m_.cols() != n) throw ConfigError("Saaty matrix must be square and non-empty");
  constexpr double kLow = 1.0 / 9.0 * (1.0 - 1e-9);
  constexpr double kHigh = 9.0 * (1.0 + 1e-9);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m_(i, i) != 1.0) {
      throw ConfigError("Saaty matrix diagonal entry " + std::to_string(i) + " is not 1");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = m_(i, j);
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw ConfigError("Saaty matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") must be positive");
      }
      if (a < kLow || a > kHigh) {
        throw ConfigError("Saaty matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside [1/9, 9]");
      }
      if (std::abs(a * m_(j, i) - 1.0) > 1e-9) {
        throw ConfigError("Saaty matrix is not reciprocal at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }
    }
  }
}

SaatyMatrix SaatyMatrix::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open Saaty matrix " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> row;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    try {
      for (const auto& f : split(t, ',')) row.push_back(parse_ratio(f, ctx));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
      throw ConfigError(path.string() + ": Saaty matrix must be " + std::to_string(n) + "x" +
                        std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return SaatyMatrix(std::move(m));
}

SaatyMatrix SaatyMatrix::from_weights(const std::vector<double>& weights) {
  const auto n = static_cast<Eigen::Index>(weights.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = i == j ? 1.0 : weights[static_cast<std::size_t>(i)] / weights[static_cast<std::size_t>(j)];
    }
  }
  return SaatyMatrix(std::move(m));
}

double random_index(Eigen::Index n) {
  static constexpr double kRandomIndex[] = {0.0,  0.0,  0.0,  0.58, 0.90, 1.12,
                                            1.24, 1.32, 1.41, 1.45, 1.49};
  if (n < 1 || n > 10) {
    throw ConfigError("random consistency index is tabulated for 1 to 10 factors, got " +
                      std::to_string(n));
  }
  return kRandomIndex[n];
}

WeightSet saaty_weights(const SaatyMatrix& saaty) {
  const Eigen::MatrixXd& a = saaty.matrix();
  const Eigen::Index n = a.rows();
  const double ri = random_index(n);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  WeightSet out;
  for (int it = 1; it <= kPowerIterationLimit; ++it) {
    const Eigen::VectorXd y = a * w;
    const double lambda = y.sum();  // w sums to 1
    const double residual = (y - lambda * w).cwiseAbs().maxCoeff();
    if (residual < kPowerIterationTolerance) {
      out.weights.assign(w.data(), w.data() + n);
      // lambda_max >= n holds for every positive reciprocal matrix; rounding can land one ulp
      // below it on consistent input.
      out.lambda_max = std::max(lambda, static_cast<double>(n));
      out.iterations = it;
      out.consistency_index = n > 1 ? (out.lambda_max - static_cast<double>(n)) / static_cast<double>(n - 1) : 0.0;
      out.consistency_ratio = n <= 2 ? 0.0 : out.consistency_index / ri;
      return out;
    }
    w = y / lambda;
  }
  throw NumericalError("power iteration did not converge within " +
                       std::to_string(kPowerIterationLimit) + " iterations");
}

Grid wlc(std::span<const Grid> factors, std::span<const double> weights,
         std::span<const BinaryMask> constraints) {
  check_factor_stack(factors, weights.size(), constraints);
  const GridGeometry geo = factors[0].geometry();
  std::vector<const double*> ptrs;
  std::vector<double> nodata;
  for (const auto& f : factors) {
    ptrs.push_back(f.values().data());
    nodata.push_back(f.nodata());
  }
  std::vector<double> out(geo.size());
  kernels::weighted_sum(ptrs, weights, nodata, out, geo.nodata);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == geo.nodata) {
      bool missing = false;
      for (const auto& f : factors) missing = missing || !f.is_valid(i);
      if (missing) continue;
    }
    out[i] = constrained_out(constraints, i) ? 0.0 : std::round(out[i]);
  }
  return Grid(geo, std::move(out));
}

Grid owa(std::span<const Grid> factors, std::span<const double> factor_weights,
         std::span<const double> order_weights, std::span<const BinaryMask> constraints) {
  check_factor_stack(factors, factor_weights.size(), constraints);
  const std::size_t n = factors.size();
  if (order_weights.size() != n) {
    throw DataError("OWA: " + std::to_string(order_weights.size()) + " order weights for " +
                    std::to_string(n) + " factors");
  }
  double total = 0.0;
  for (double o : order_weights) {
    if (!(o >= 0.0)) throw DataError("OWA order weights must be non-negative");
    total += o;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("OWA order weights must sum to 1");

  const GridGeometry geo = factors[0].geometry();
  const auto dn = static_cast<double>(n);
  std::vector<double> out(geo.size(), geo.nodata);
  std::vector<double> weighted(n);
  std::vector<std::size_t> order(n), position(n);
  for (std::size_t i = 0; i < geo.size(); ++i) {
    bool missing = false;
    for (const auto& f : factors) missing = missing || !f.is_valid(i);
    if (missing) continue;
    for (std::size_t k = 0; k < n; ++k) weighted[k] = factor_weights[k] * factors[k][i];
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return weighted[x] < weighted[y]; });
    for (std::size_t p = 0; p < n; ++p) position[order[p]] = p;
    // Accumulate in factor order so uniform order weights retrace the wlc sum exactly.
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double coefficient = order_weights[position[k]] * dn;
      const double term = coefficient * weighted[k];
      acc = acc + term;
    }
    out[i] = constrained_out(constraints, i) ? 0.0 : std::round(std::clamp(acc, 0.0, 255.0));
  }
  return Grid(geo, std::move(out));
}

}  // namespace lcm
