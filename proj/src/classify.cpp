#include "lcm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

namespace {

constexpr double kScoreNodata = std::numeric_limits<double>::lowest();

bool pixel_vector(const MultiBandImage& image, std::size_t i, Eigen::VectorXd& x) {
  for (std::size_t b = 0; b < image.band_count(); ++b) {
    const Grid& band = image.band(b);
    if (!band.is_valid(i)) return false;
    x[static_cast<Eigen::Index>(b)] = band[i];
  }
  return true;
}

std::size_t index_of_class(const std::vector<int>& ids, int id) {
  const auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) {
    throw DataError("class " + std::to_string(id) + " has no score grid");
  }
  return static_cast<std::size_t>(it - ids.begin());
}

}  // namespace

SignatureSet estimate_signatures(const MultiBandImage& image, const LandCoverMap& training) {
  require_same_frame(image.geometry(), training.geometry(), "training map vs image");
  const auto nb = static_cast<Eigen::Index>(image.band_count());
  std::map<int, std::vector<Eigen::VectorXd>> samples;
  for (int id : training.class_ids()) samples[id];
  Eigen::VectorXd x(nb);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < training.size(); ++i) {
    if (!training.is_valid(i) || !pixel_vector(image, i, x)) continue;
    samples[training.class_at(i)].push_back(x);
    ++total;
  }

  SignatureSet set;
  set.legend = training.legend();
  for (const auto& [id, xs] : samples) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    if (n < nb + 1) {
      const auto name = training.legend().at(id);
      throw DataError("class " + std::to_string(id) + " ('" + name + "') has " +
                      std::to_string(n) + " training pixels; needs at least " +
                      std::to_string(nb + 1));
    }
    ClassSignature sig;
    sig.class_id = id;
    sig.sample_count = n;
    sig.mean = Eigen::VectorXd::Zero(nb);
    for (const auto& s : xs) sig.mean += s;
    sig.mean /= static_cast<double>(n);
    sig.covariance = Eigen::MatrixXd::Zero(nb, nb);
    for (const auto& s : xs) {
      const Eigen::VectorXd d = s - sig.mean;
      sig.covariance.noalias() += d * d.transpose();
    }
    sig.covariance /= static_cast<double>(n - 1);
    const double trace = sig.covariance.trace();
    const double delta =
        trace > 0.0 ? kCovarianceRegularization * trace / static_cast<double>(nb)
                    : kCovarianceRegularization;
    sig.covariance.diagonal().array() += delta;
    if (Eigen::LLT<Eigen::MatrixXd>(sig.covariance).info() != Eigen::Success) {
      throw NumericalError("covariance of class " + std::to_string(id) +
                           " is singular after regularization");
    }
    sig.prior = static_cast<double>(n) / static_cast<double>(total);
    set.classes.push_back(std::move(sig));
  }
  if (set.classes.empty()) throw DataError("training map has no classes");
  return set;
}

MaxLikeResult maxlike(const MultiBandImage& image, const SignatureSet& signatures,
                      PriorMode priors) {
  const auto nb = static_cast<Eigen::Index>(image.band_count());
  const std::size_t nc = signatures.classes.size();
  if (nc == 0) throw DataError("maxlike: no class signatures");
  struct Prepared {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double constant = 0.0;  // ln p - 0.5 ln det
  };
  std::vector<Prepared> prepared;
  for (const auto& sig : signatures.classes) {
    if (sig.mean.size() != nb || sig.covariance.rows() != nb || sig.covariance.cols() != nb) {
      throw DataError("signature of class " + std::to_string(sig.class_id) + " has " +
                      std::to_string(sig.mean.size()) + " bands, image has " +
                      std::to_string(nb));
    }
    Prepared p;
    p.llt.compute(sig.covariance);
    if (p.llt.info() != Eigen::Success) {
      throw NumericalError("covariance of class " + std::to_string(sig.class_id) +
                           " is not positive-definite");
    }
    const Eigen::MatrixXd l = p.llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double prior = priors == PriorMode::equal ? 1.0 / static_cast<double>(nc) : sig.prior;
    if (!(prior > 0.0)) {
      throw NumericalError("class " + std::to_string(sig.class_id) + " has a non-positive prior");
    }
    p.constant = std::log(prior) - 0.5 * log_det;
    prepared.push_back(std::move(p));
  }

  const GridGeometry geo = image.geometry();
  std::vector<std::vector<double>> scores(nc, std::vector<double>(geo.size(), kScoreNodata));
  std::vector<double> labels(geo.size(), geo.nodata);
  Eigen::VectorXd x(nb);
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (!pixel_vector(image, i, x)) continue;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      const Eigen::VectorXd y =
          prepared[c].llt.matrixL().solve(x - signatures.classes[c].mean);
      const double s = prepared[c].constant - 0.5 * y.squaredNorm();
      scores[c][i] = s;
      if (s > best) {
        best = s;
        best_c = c;
      }
    }
    labels[i] = signatures.classes[best_c].class_id;
  }

  MaxLikeResult result;
  GridGeometry score_geo = geo;
  score_geo.nodata = kScoreNodata;
  for (std::size_t c = 0; c < nc; ++c) {
    result.scores.class_ids.push_back(signatures.classes[c].class_id);
    result.scores.grids.emplace_back(score_geo, std::move(scores[c]));
  }
  result.map = LandCoverMap(Grid(geo, std::move(labels)), signatures.legend, "classified");
  return result;
}

long double icm_objective(const LandCoverMap& map, const ClassScores& scores, double beta) {
  const int rows = map.geometry().rows;
  const int cols = map.geometry().cols;
  long double total = 0.0L;
  std::int64_t pairs = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (!map.is_valid(i)) continue;
      const int label = map.class_at(i);
      total += scores.grids[index_of_class(scores.class_ids, label)][i];
      // Forward half of the 8-neighbourhood so each unordered pair is counted once.
      static constexpr int kForward[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
      for (const auto& d : kForward) {
        const int rr = r + d[0], cc = c + d[1];
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * cols + cc;
        if (map.is_valid(j) && map.class_at(j) == label) ++pairs;
      }
    }
  }
  return total + static_cast<long double>(beta) * static_cast<long double>(pairs);
}

IcmResult icm(const LandCoverMap& initial, const ClassScores& scores, IcmOptions options) {
  if (!(options.beta >= 0.0)) throw DataError("ICM beta must be non-negative");
  if (options.max_sweeps < 1) throw DataError("ICM max_sweeps must be at least 1");
  if (scores.class_ids.size() != scores.grids.size() || scores.grids.empty()) {
    throw DataError("ICM: score grids do not match class ids");
  }
  if (!std::is_sorted(scores.class_ids.begin(), scores.class_ids.end())) {
    throw DataError("ICM: class ids must be ascending");
  }
  for (const auto& g : scores.grids) {
    require_same_frame(initial.geometry(), g.geometry(), "ICM score grid vs map");
  }
  const GridGeometry geo = initial.geometry();
  const int rows = geo.rows, cols = geo.cols;
  const std::size_t nc = scores.class_ids.size();

  // Labels held as class indices; -1 marks unlabelled pixels.
  std::vector<int> label(geo.size(), -1);
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (!initial.is_valid(i)) continue;
    const std::size_t c = index_of_class(scores.class_ids, initial.class_at(i));
    bool scored = true;
    for (const auto& g : scores.grids) scored = scored && g.is_valid(i);
    label[i] = scored ? static_cast<int>(c) : -1;
  }
  const auto to_map = [&] {
    std::vector<double> v(geo.size(), geo.nodata);
    for (std::size_t i = 0; i < geo.size(); ++i) {
      if (label[i] >= 0) v[i] = scores.class_ids[static_cast<std::size_t>(label[i])];
      else if (initial.is_valid(i)) v[i] = initial.grid()[i];
    }
    return LandCoverMap(Grid(geo, std::move(v)), initial.legend(), initial.date_tag());
  };

  IcmResult result;
  result.objective.push_back(icm_objective(initial, scores, options.beta));
  std::vector<int> neighbours(nc);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    std::size_t changed = 0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        if (label[i] < 0) continue;
        std::fill(neighbours.begin(), neighbours.end(), 0);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
            const int l = label[static_cast<std::size_t>(rr) * cols + cc];
            if (l >= 0) ++neighbours[static_cast<std::size_t>(l)];
          }
        }
        const auto value = [&](std::size_t k) {
          return scores.grids[k][i] + options.beta * neighbours[k];
        };
        const auto current = static_cast<std::size_t>(label[i]);
        double best = value(current);
        std::size_t best_k = current;
        for (std::size_t k = 0; k < nc; ++k) {
          const double v = value(k);
          if (v > best) {
            best = v;
            best_k = k;
          }
        }
        if (best_k != current) {
          label[i] = static_cast<int>(best_k);
          ++changed;
        }
      }
    }
    result.sweeps = sweep + 1;
    result.map = to_map();
    result.objective.push_back(icm_objective(result.map, scores, options.beta));
    if (changed == 0) break;
  }
  return result;
}

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(const LandCoverMap& predicted, const LandCoverMap& reference,
                          const BinaryMask* mask) {
  require_same_frame(predicted.geometry(), reference.geometry(), "predicted vs reference map");
  if (mask) require_same_frame(predicted.geometry(), mask->geometry(), "confusion mask");
  std::set<int> ids;
  for (const auto& e : predicted.legend()) ids.insert(e.first);
  for (const auto& e : reference.legend()) ids.insert(e.first);
  ConfusionMatrix cm;
  cm.class_ids.assign(ids.begin(), ids.end());
  const std::size_t n = cm.class_ids.size();
  cm.counts.assign(n * n, 0);
  const auto slot = [&](int id) {
    return static_cast<std::size_t>(
        std::lower_bound(cm.class_ids.begin(), cm.class_ids.end(), id) - cm.class_ids.begin());
  };
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!predicted.is_valid(i) || !reference.is_valid(i)) continue;
    if (mask && !(*mask)[i]) continue;
    ++cm.counts[slot(reference.class_at(i)) * n + slot(predicted.class_at(i))];
  }
  if (cm.total() == 0) throw DataError("confusion: no jointly valid pixels");
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const auto total = static_cast<double>(cm.total());
  if (total == 0.0) throw DataError("accuracy of an empty confusion matrix");
  double diag = 0.0;
  for (std::size_t k = 0; k < cm.order(); ++k) diag += static_cast<double>(cm.at(k, k));
  return diag / total;
}

double kappa(const ConfusionMatrix& cm) {
  const std::size_t n = cm.order();
  const auto total = static_cast<double>(cm.total());
  if (total == 0.0) throw DataError("kappa of an empty confusion matrix");
  double diag = 0.0, chance = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    diag += static_cast<double>(cm.at(k, k));
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += static_cast<double>(cm.at(k, j));
      col += static_cast<double>(cm.at(j, k));
    }
    chance += row * col;
  }
  const double po = diag / total;
  const double pe = chance / (total * total);
  if (pe == 1.0) throw NumericalError("kappa undefined: expected agreement equals 1");
  return (po - pe) / (1.0 - pe);
}

Residuals residual_map(const LandCoverMap& predicted, const LandCoverMap& reference) {
  require_same_frame(predicted.geometry(), reference.geometry(), "predicted vs reference map");
  std::vector<std::uint8_t> diff(predicted.size(), 0);
  std::map<int, std::pair<std::int64_t, std::int64_t>> tally;  // class -> (correct, total)
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!predicted.is_valid(i) || !reference.is_valid(i)) continue;
    const int ref = reference.class_at(i);
    const bool agree = predicted.class_at(i) == ref;
    diff[i] = agree ? 0 : 1;
    auto& t = tally[ref];
    t.first += agree ? 1 : 0;
    ++t.second;
  }
  Residuals res{BinaryMask(predicted.geometry(), std::move(diff)), {}};
  for (const auto& [id, t] : tally) {
    res.producer_accuracy[id] = static_cast<double>(t.first) / static_cast<double>(t.second);
  }
  return res;
}

std::string format_confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "reference\\predicted";
  for (int id : cm.class_ids) out += "," + std::to_string(id);
  out += "\n";
  for (std::size_t r = 0; r < cm.order(); ++r) {
    out += std::to_string(cm.class_ids[r]);
    for (std::size_t c = 0; c < cm.order(); ++c) out += "," + std::to_string(cm.at(r, c));
    out += "\n";
  }
  return out;
}

std::string format_signatures_csv(const SignatureSet& signatures) {
  const Eigen::Index nb = signatures.classes.front().mean.size();
  std::string out = "class_id,prior,sample_count";
  for (Eigen::Index b = 0; b < nb; ++b) out += ",mean_" + std::to_string(b);
  for (Eigen::Index r = 0; r < nb; ++r) {
    for (Eigen::Index c = 0; c < nb; ++c) {
      out += ",cov_" + std::to_string(r) + "_" + std::to_string(c);
    }
  }
  out += "\n";
  for (const auto& s : signatures.classes) {
    out += std::to_string(s.class_id) + "," + format_number(s.prior) + "," +
           std::to_string(s.sample_count);
    for (Eigen::Index b = 0; b < nb; ++b) out += "," + format_number(s.mean[b]);
    for (Eigen::Index r = 0; r < nb; ++r) {
      for (Eigen::Index c = 0; c < nb; ++c) out += "," + format_number(s.covariance(r, c));
    }
    out += "\n";
  }
  return out;
}

SignatureSet read_signatures_csv(const std::filesystem::path& path, const Legend& legend) {
  const CsvTable t = read_csv(path);
  const std::size_t cols = t.header.size();
  // 3 + nb + nb^2 columns
  Eigen::Index nb = 0;
  while (3 + static_cast<std::size_t>(nb + nb * nb) < cols) ++nb;
  if (nb == 0 || 3 + static_cast<std::size_t>(nb + nb * nb) != cols) {
    throw DataError(path.string() + ": signature table has an invalid column count");
  }
  SignatureSet set;
  set.legend = legend;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = path.string() + ":" + std::to_string(t.line_numbers[r]);
    ClassSignature s;
    s.class_id = parse_int(row[0], ctx);
    if (legend.count(s.class_id) == 0) {
      throw DataError(ctx + ": class " + std::to_string(s.class_id) + " not in legend");
    }
    s.prior = parse_number(row[1], ctx);
    s.sample_count = parse_int(row[2], ctx);
    s.mean.resize(nb);
    s.covariance.resize(nb, nb);
    for (Eigen::Index b = 0; b < nb; ++b) s.mean[b] = parse_number(row[3 + b], ctx);
    for (Eigen::Index i = 0; i < nb * nb; ++i) {
      s.covariance(i / nb, i % nb) = parse_number(row[static_cast<std::size_t>(3 + nb + i)], ctx);
    }
    set.classes.push_back(std::move(s));
  }
  std::sort(set.classes.begin(), set.classes.end(),
            [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  return set;
}

}  // namespace lcm
